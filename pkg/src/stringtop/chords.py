"""Chord diagrams, their relations, and evaluation against holonomy data.

A diagram is a set of oriented circles carrying representation labels,
with a perfect matching (arcs) on the endpoint labels distributed over
the circles. A realization maps each circle to a loop and each endpoint
to a loop parameter so that matched endpoints land on the same point of
the space. Evaluation inserts contracted basis elements at the endpoints
and multiplies the traces of the resulting alternating products.
"""

from __future__ import annotations

import itertools
from fractions import Fraction
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from .geometry import PLLoop, Torus, rat_to_json
from .lierep import LieBasis
from .holonomy import transport
from .strings import TransversalityError, intersections

__all__ = [
    "ChordDiagram",
    "Circle",
    "DiagramRealization",
    "chord_bracket_degree0",
    "chord_bracket_prefactor",
    "evaluate_combination",
    "evaluate_diagram",
    "four_t_combination",
    "gln_ideal_element",
]


class Circle(NamedTuple):
    rep: str
    endpoints: tuple[str, ...]


def _canonical_rotation(seq: tuple[str, ...]) -> tuple[str, ...]:
    if not seq:
        return seq
    rotations = [seq[i:] + seq[:i] for i in range(len(seq))]
    return min(rotations)


def parse_rep(label: str) -> tuple[str, int]:
    kind, _, size = label.partition(":")
    if kind not in ("std", "diag") or not size.isdigit() or int(size) < 1:
        raise ValueError(f"unknown representation {label!r}")
    return kind, int(size)


def _rep_matrix(kind: str, basis: LieBasis, a: int) -> np.ndarray:
    if kind == "std":
        return basis.matrix(a)
    # diagonal subalgebra padded by zero: not a representation of the
    # full algebra, used to show the trace ideal is gl(n)-specific
    i, j = basis.unit(a)
    if i == j:
        return basis.matrix(a)
    return np.zeros((basis.n, basis.n), dtype=complex)


class ChordDiagram:
    """Circles with representation labels plus a perfect matching of arcs."""

    def __init__(
        self,
        circles: Iterable[tuple[str, Sequence[str]]],
        arcs: Iterable[Sequence[str]],
    ) -> None:
        cs = []
        for rep, endpoints in circles:
            parse_rep(rep)
            cs.append(Circle(rep, _canonical_rotation(tuple(endpoints))))
        self.circles = tuple(cs)
        seen: dict[str, int] = {}
        for idx, circle in enumerate(self.circles):
            for label in circle.endpoints:
                if label in seen:
                    raise ValueError(f"duplicate endpoint label {label!r}")
                seen[label] = idx
        self._circle_of = seen
        norm = []
        matched: set[str] = set()
        for pair in arcs:
            l1, l2 = pair
            if l1 == l2:
                raise ValueError(f"arc pairs {l1!r} with itself")
            for label in (l1, l2):
                if label not in seen:
                    raise ValueError(f"arc endpoint {label!r} is on no circle")
                if label in matched:
                    raise ValueError(f"endpoint {label!r} is in two arcs")
                matched.add(label)
            norm.append(tuple(sorted((l1, l2))))
        if matched != set(seen):
            missing = sorted(set(seen) - matched)
            raise ValueError(f"endpoints {missing} are not matched by any arc")
        self.arcs = tuple(sorted(norm))

    def circle_of(self, label: str) -> int:
        try:
            return self._circle_of[label]
        except KeyError:
            raise ValueError(f"unknown endpoint {label!r}") from None

    def arc_of(self, label: str) -> tuple[str, str]:
        for arc in self.arcs:
            if label in arc:
                return arc
        raise ValueError(f"unknown endpoint {label!r}")

    def _key(self):
        return (self.circles, self.arcs)

    def __eq__(self, other) -> bool:
        return isinstance(other, ChordDiagram) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self) -> str:
        cs = "; ".join(f"{c.rep}({','.join(c.endpoints)})" for c in self.circles)
        return f"ChordDiagram[{cs} | {len(self.arcs)} arcs]"

    def to_json_obj(self) -> dict:
        return {
            "circles": [
                {"rep": c.rep, "endpoints": list(c.endpoints)} for c in self.circles
            ],
            "arcs": [list(a) for a in self.arcs],
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "ChordDiagram":
        return cls(
            [(c["rep"], tuple(c["endpoints"])) for c in obj["circles"]],
            [tuple(a) for a in obj["arcs"]],
        )


def _cross2(u, v) -> Fraction:
    return u[0] * v[1] - u[1] * v[0]


class DiagramRealization:
    """A diagram with one loop per circle and a parameter per endpoint.

    Matched endpoints must land on the same point of the space; endpoint
    parameters must be cyclically sorted along each circle, where equal
    parameters are allowed (insertions at the same point) and their order
    is taken from the circle's endpoint sequence.
    """

    def __init__(
        self,
        diagram: ChordDiagram,
        loops: Sequence[PLLoop],
        params: Mapping[str, Fraction],
    ) -> None:
        if len(loops) != len(diagram.circles):
            raise ValueError("one loop per circle required")
        space = loops[0].space if loops else None
        if any(lp.space != space for lp in loops):
            raise ValueError("loops live on different spaces")
        want = set(diagram._circle_of)
        if set(params) != want:
            raise ValueError("parameters must cover exactly the endpoint labels")
        clean = {}
        for label, s in params.items():
            s = Fraction(s)
            if not 0 <= s < 1:
                raise ValueError(f"parameter of {label!r} outside [0, 1)")
            clean[label] = s
        self.diagram = diagram
        self.loops = tuple(loops)
        self.params = clean
        self._starts = tuple(
            self._check_cyclic(circle, idx) for idx, circle in enumerate(diagram.circles)
        )
        for arc in diagram.arcs:
            self._check_arc(arc)

    def _check_cyclic(self, circle: Circle, idx: int) -> int:
        labels = circle.endpoints
        if not labels:
            return 0
        vals = [self.params[l] for l in labels]
        k = len(vals)
        drops = [i for i in range(k) if vals[i] > vals[(i + 1) % k]]
        if len(drops) > 1:
            raise ValueError(
                f"endpoint parameters disagree with the cyclic order on circle {idx}"
            )
        return (drops[0] + 1) % k if drops else 0

    def _meeting_point(self, label: str):
        idx = self.diagram.circle_of(label)
        return self.loops[idx].point_at(self.params[label])

    def _check_arc(self, arc: tuple[str, str]) -> None:
        p1 = self._meeting_point(arc[0])
        p2 = self._meeting_point(arc[1])
        space = self.loops[0].space
        diff = [a - b for a, b in zip(p1, p2)]
        if isinstance(space, Torus):
            ok = all(x.denominator == 1 for x in diff)
        else:
            ok = all(x == 0 for x in diff)
        if not ok:
            raise ValueError(f"arc {arc} endpoints meet at different points")
        if space.d == 2:
            i1 = self.diagram.circle_of(arc[0])
            i2 = self.diagram.circle_of(arc[1])
            v1 = self.loops[i1].velocity_at(self.params[arc[0]])
            v2 = self.loops[i2].velocity_at(self.params[arc[1]])
            if _cross2(v1, v2) == 0:
                raise TransversalityError(f"arc {arc} meets tangentially")

    def ordered_endpoints(self, idx: int) -> tuple[str, ...]:
        """Endpoints of circle idx in traversal order from the marked point."""
        labels = self.diagram.circles[idx].endpoints
        start = self._starts[idx]
        return labels[start:] + labels[:start]

    def to_json_obj(self) -> dict:
        return {
            "diagram": self.diagram.to_json_obj(),
            "loops": [lp.to_json_obj() for lp in self.loops],
            "params": {l: rat_to_json(s) for l, s in self.params.items()},
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "DiagramRealization":
        return cls(
            ChordDiagram.from_json_obj(obj["diagram"]),
            [PLLoop.from_json_obj(lp) for lp in obj["loops"]],
            {l: Fraction(s) for l, s in obj["params"].items()},
        )


# -- evaluation ----------------------------------------------------------------


def evaluate_diagram(realization: DiagramRealization, conn, plan=None) -> complex:
    """Product over circles of traces of transports and arc insertions.

    Each arc contributes a basis pair fully contracted with the inverse
    trace form; insertions follow the circles' traversal order, with a
    plain transport between consecutive endpoint parameters. The plan
    argument is accepted for interface parity; plain transports are exact.
    """
    diag = realization.diagram
    reps = [parse_rep(c.rep) for c in diag.circles]
    for _, size in reps:
        if size != conn.n:
            raise ValueError("representation size differs from the connection")
    basis = LieBasis(conn.n)
    dim = conn.n * conn.n
    pairs = [
        (a, b, basis.kappa_inv(a, b))
        for a in range(dim)
        for b in range(dim)
        if basis.kappa_inv(a, b)
    ]

    # transports between consecutive insertion parameters, one pass per circle
    hops: list[list[np.ndarray]] = []
    ordered: list[tuple[str, ...]] = []
    for idx, loop in enumerate(realization.loops):
        labels = realization.ordered_endpoints(idx)
        ordered.append(labels)
        if not labels:
            hops.append([transport(conn, loop)])
            continue
        ss = [realization.params[l] for l in labels]
        segs = []
        for s, t in zip(ss, ss[1:]):
            segs.append(transport(conn, loop, s, t))
        segs.append(transport(conn, loop, ss[-1], Fraction(1)) @ transport(conn, loop, Fraction(0), ss[0]))
        hops.append(segs)

    total = 0j
    for assignment in itertools.product(pairs, repeat=len(diag.arcs)):
        ins: dict[str, np.ndarray] = {}
        weight = 1
        for arc, (a, b, k) in zip(diag.arcs, assignment):
            weight *= k
            ins[arc[0]] = _rep_matrix(reps[diag.circle_of(arc[0])][0], basis, a)
            ins[arc[1]] = _rep_matrix(reps[diag.circle_of(arc[1])][0], basis, b)
        val = complex(weight)
        for idx in range(len(diag.circles)):
            labels = ordered[idx]
            if not labels:
                val *= complex(np.trace(hops[idx][0]))
                continue
            prod = None
            for pos, label in enumerate(labels):
                step = ins[label] @ hops[idx][pos]
                prod = step if prod is None else prod @ step
            val *= complex(np.trace(prod))
        total += val
    return total


def evaluate_combination(
    terms: Sequence[tuple[int, DiagramRealization]], conn, plan=None
) -> complex:
    return sum(
        (coeff * evaluate_diagram(r, conn, plan) for coeff, r in terms), start=0j
    )


# -- relations -------------------------------------------------------------------


def _reposition(diagram: ChordDiagram, x: str, target: str, after: bool) -> ChordDiagram:
    """Move endpoint x next to target (same circle as target), arcs unchanged."""
    circles = []
    for circle in diagram.circles:
        endpoints = tuple(l for l in circle.endpoints if l != x)
        if target in endpoints:
            at = endpoints.index(target) + (1 if after else 0)
            endpoints = endpoints[:at] + (x,) + endpoints[at:]
        circles.append((circle.rep, endpoints))
    return ChordDiagram(circles, diagram.arcs)


def four_t_combination(
    diagram: ChordDiagram, x: str, arc: Sequence[str]
) -> list[tuple[int, ChordDiagram]]:
    """Four-term relation at a crossing: the combination evaluates to zero.

    x is an endpoint of a second chord sitting right next to one end of
    ``arc``; the terms place x at the four adjacent slots [after p,
    before p, after q, before q] with signs (+, -, +, -). Evaluation
    kills the combination by invariance of the contracted basis pair.
    """
    arc = tuple(sorted(arc))
    if arc not in diagram.arcs:
        raise ValueError(f"{arc} is not an arc of the diagram")
    if x in arc:
        raise ValueError("site endpoint lies on the chord itself")
    partner_arc = diagram.arc_of(x)
    idx = diagram.circle_of(x)
    seq = diagram.circles[idx].endpoints
    pos = seq.index(x)
    neighbors = {seq[pos - 1], seq[(pos + 1) % len(seq)]} if len(seq) > 1 else set()
    if not neighbors & set(arc):
        raise ValueError("site endpoint is not adjacent to the chord")
    out = []
    for target in arc:
        for after, sign in ((True, 1), (False, -1)):
            out.append((sign, _reposition(diagram, x, target, after)))
    return out


def gln_ideal_element(
    diagram: ChordDiagram, arc: Sequence[str]
) -> list[tuple[int, ChordDiagram]]:
    """(chorded) - (smoothed): evaluates to zero in the standard rep.

    Smoothing reconnects the strands at the chord: a chord joining two
    circles merges them into one; a self-chord splits its circle in two.
    """
    arc = tuple(sorted(arc))
    if arc not in diagram.arcs:
        raise ValueError(f"{arc} is not an arc of the diagram")
    p, q = arc
    i1, i2 = diagram.circle_of(p), diagram.circle_of(q)
    rest = tuple(a for a in diagram.arcs if a != arc)
    circles = list(diagram.circles)
    if i1 != i2:
        c1, c2 = circles[i1], circles[i2]
        if c1.rep != c2.rep:
            raise ValueError("smoothing requires matching representations")
        r1 = c1.endpoints.index(p)
        r2 = c2.endpoints.index(q)
        body1 = c1.endpoints[r1 + 1 :] + c1.endpoints[:r1]
        body2 = c2.endpoints[r2 + 1 :] + c2.endpoints[:r2]
        merged = (c1.rep, body1 + body2)
        lo, hi = sorted((i1, i2))
        circles[lo] = merged
        del circles[hi]
    else:
        c = circles[i1]
        r1 = c.endpoints.index(p)
        rotated = c.endpoints[r1 + 1 :] + c.endpoints[:r1]
        r2 = rotated.index(q)
        circles[i1] = (c.rep, rotated[:r2])
        circles.insert(i1 + 1, (c.rep, rotated[r2 + 1 :]))
    circles = [(c.rep, c.endpoints) if isinstance(c, Circle) else c for c in circles]
    return [(1, diagram), (-1, ChordDiagram(circles, rest))]


# -- degree-0 bracket -------------------------------------------------------------


def chord_bracket_prefactor(bar_degree: int, degree: int, d: int) -> int:
    """Bracket prefactor (-1)^{bar_degree (degree + d)}; +1 at degree 0."""
    return -1 if (bar_degree * (degree + d)) % 2 else 1


def _insert_endpoint(
    rep: str,
    ordered: Sequence[str],
    params: Mapping[str, Fraction],
    label: str,
    s: Fraction,
) -> tuple[str, tuple[str, ...]]:
    """Insert a label into a traversal-ordered endpoint sequence by parameter."""
    if any(params[l] == s for l in ordered):
        raise ValueError("crossing collides with an existing endpoint parameter")
    at = 0
    while at < len(ordered) and params[ordered[at]] < s:
        at += 1
    new = tuple(ordered[:at]) + (label,) + tuple(ordered[at:])
    return (rep, new)


def chord_bracket_degree0(
    a: Sequence[tuple[int, DiagramRealization]],
    abar: Sequence[tuple[int, DiagramRealization]],
) -> list[tuple[int, DiagramRealization]]:
    """Bracket of realized diagram combinations: one new arc per crossing.

    For every transversal crossing between a circle of a term of ``a`` and
    a circle of a term of ``abar``, emit the union diagram with a fresh
    arc at the crossing, weighted by the crossing sign and coefficients.
    """
    out: list[tuple[int, DiagramRealization]] = []
    counter = itertools.count()
    for ca, ra in a:
        for cb, rb in abar:
            common = set(ra.diagram._circle_of) & set(rb.diagram._circle_of)
            if common:
                raise ValueError(f"endpoint labels {sorted(common)} appear on both sides")
            pref = chord_bracket_prefactor(0, 0, ra.loops[0].space.d)
            for i, loop_i in enumerate(ra.loops):
                for j, loop_j in enumerate(rb.loops):
                    for pt in intersections(loop_i, loop_j):
                        k = next(counter)
                        lab_a, lab_b = f"_br{k}a", f"_br{k}b"
                        circles = []
                        params = dict(ra.params)
                        params.update(rb.params)
                        params[lab_a] = pt.s
                        params[lab_b] = pt.s_bar
                        for ii, circle in enumerate(ra.diagram.circles):
                            if ii == i:
                                circles.append(
                                    _insert_endpoint(
                                        circle.rep,
                                        ra.ordered_endpoints(ii),
                                        params,
                                        lab_a,
                                        pt.s,
                                    )
                                )
                            else:
                                circles.append((circle.rep, circle.endpoints))
                        for jj, circle in enumerate(rb.diagram.circles):
                            if jj == j:
                                circles.append(
                                    _insert_endpoint(
                                        circle.rep,
                                        rb.ordered_endpoints(jj),
                                        params,
                                        lab_b,
                                        pt.s_bar,
                                    )
                                )
                            else:
                                circles.append((circle.rep, circle.endpoints))
                        arcs = list(ra.diagram.arcs) + list(rb.diagram.arcs)
                        arcs.append((lab_a, lab_b))
                        diagram = ChordDiagram(circles, arcs)
                        realization = DiagramRealization(
                            diagram, list(ra.loops) + list(rb.loops), params
                        )
                        out.append((ca * cb * pref * pt.sign, realization))
    return out
