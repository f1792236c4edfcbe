"""Flat spaces, piecewise-linear loops, and loop variations.

Two model spaces are supported: a single affine chart R^d and the flat
torus R^d / Z^d, both with d >= 2. A loop is a closed piecewise-linear
path given by the vertices of one lift to R^d, with exact rational
coordinates, plus an integer closure vector: the lift ends at
vertices[0] + closure. On a chart the closure must vanish; on the torus it
is the homotopy/homology class of the loop.

Parametrization is uniform in t: with K segments, t in [i/K, (i+1)/K]
traverses segment i affinely. All point and velocity evaluations at
rational t are exact.

Loop deformations are carried by ``VariationField``: a displacement vector
per vertex, interpolated affinely along segments. Deforming by a rational
epsilon stays inside the exact PL category and never changes the closure
word. A second, evaluation-only flavor represents the velocity field of
the loop itself (discontinuous at corners, so not realizable by vertex
displacements); it exists so that contractions with gamma' can be tested
exactly.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence


@dataclass(frozen=True)
class Chart:
    """A single affine chart R^d."""

    d: int
    kind: str = "chart"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be at least 2")


@dataclass(frozen=True)
class Torus:
    """The flat torus R^d / Z^d, coordinates understood mod 1."""

    d: int
    kind: str = "torus"

    def __post_init__(self):
        if self.d < 2:
            raise ValueError("dimension must be at least 2")


Space = Chart | Torus


def space_to_json(space: Space) -> dict:
    return {"type": space.kind, "d": space.d}


def space_from_json(obj: dict) -> Space:
    kind = obj["type"]
    if kind == "chart":
        return Chart(int(obj["d"]))
    if kind == "torus":
        return Torus(int(obj["d"]))
    raise ValueError(f"unknown space type {kind!r}")


def _rat(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if isinstance(x, float):
        # floats are accepted for convenience but snapped to exact dyadic
        # rationals; callers who care pass Fraction or "p/q" strings
        return Fraction(x).limit_denominator(10**12)
    raise TypeError(f"cannot interpret {x!r} as a rational coordinate")


def rat_to_json(x: Fraction) -> str:
    return str(x)


Point = tuple[Fraction, ...]


def _as_point(coords: Iterable, d: int) -> Point:
    pt = tuple(_rat(c) for c in coords)
    if len(pt) != d:
        raise ValueError(f"point has {len(pt)} coordinates, expected {d}")
    return pt


def _add(p: Point, q: Sequence[Fraction]) -> Point:
    return tuple(a + b for a, b in zip(p, q))


def _sub(p: Point, q: Sequence[Fraction]) -> Point:
    return tuple(a - b for a, b in zip(p, q))


def _scale(p: Sequence[Fraction], s: Fraction) -> Point:
    return tuple(s * a for a in p)


class PLLoop:
    """Closed piecewise-linear loop, one lift, exact rational vertices.

    vertices[i] for i in 0..K-1, and the lift closes at
    vertices[0] + closure. Consecutive vertices must differ (no zero-length
    segments, and in particular no constant loops).
    """

    __slots__ = ("space", "vertices", "closure")

    def __init__(
        self,
        space: Space,
        vertices: Sequence[Iterable],
        closure: Sequence[int] | None = None,
    ) -> None:
        self.space = space
        d = space.d
        self.vertices: tuple[Point, ...] = tuple(_as_point(v, d) for v in vertices)
        if closure is None:
            closure = (0,) * d
        self.closure: tuple[int, ...] = tuple(int(c) for c in closure)
        if len(self.closure) != d:
            raise ValueError("closure vector has wrong dimension")
        if isinstance(space, Chart) and any(self.closure):
            raise ValueError("loops on a chart must have zero closure")
        if not self.vertices:
            raise ValueError("loop needs at least one vertex")
        k = len(self.vertices)
        for i in range(k):
            if self.vertex(i) == self.vertex(i + 1):
                raise ValueError(
                    "consecutive vertices coincide (constant segments are not allowed)"
                )

    @property
    def num_segments(self) -> int:
        return len(self.vertices)

    def vertex(self, i: int) -> Point:
        """Vertex of the lift, extended periodically: P_{i+K} = P_i + closure."""
        k = len(self.vertices)
        wraps, idx = divmod(i, k)
        base = self.vertices[idx]
        if wraps == 0:
            return base
        return tuple(c + wraps * m for c, m in zip(base, self.closure))

    def segment(self, i: int) -> tuple[Point, Point]:
        return self.vertex(i), self.vertex(i + 1)

    def segment_velocity(self, i: int) -> Point:
        """Velocity on segment i: K * (P_{i+1} - P_i), constant there."""
        a, b = self.segment(i)
        k = Fraction(self.num_segments)
        return tuple(k * (y - x) for x, y in zip(a, b))

    def segment_of(self, t: Fraction) -> tuple[int, Fraction]:
        """Segment index and local coordinate u in [0,1] for t in [0,1]."""
        t = _rat(t)
        if not 0 <= t <= 1:
            raise ValueError("parameter must lie in [0, 1]")
        k = self.num_segments
        u = t * k
        i = int(u)
        if i == k:
            i, u = k - 1, Fraction(k)
        return i, u - i

    def point_at(self, t: Fraction) -> Point:
        i, u = self.segment_of(t)
        a, b = self.segment(i)
        return tuple(x + u * (y - x) for x, y in zip(a, b))

    def velocity_at(self, t: Fraction) -> Point:
        """Right-sided velocity at t (segment velocity of the segment containing t)."""
        i, _ = self.segment_of(t)
        return self.segment_velocity(i)

    # -- transformations ---------------------------------------------------

    def translate(self, vec: Sequence) -> "PLLoop":
        v = _as_point(vec, self.space.d)
        return PLLoop(self.space, [_add(p, v) for p in self.vertices], self.closure)

    def rotate_marked(self, k: int) -> "PLLoop":
        """Move the marked point (parameter 0) to the current vertex k."""
        n = self.num_segments
        k = k % n
        verts = [self.vertex(k + i) for i in range(n)]
        return PLLoop(self.space, verts, self.closure)

    def reverse(self) -> "PLLoop":
        """Orientation reversal, re-based at the original marked point."""
        n = self.num_segments
        verts = [self.vertices[0]] + [
            _sub(self.vertex(n - i), self.closure) for i in range(1, n)
        ]
        return PLLoop(self.space, verts, tuple(-c for c in self.closure))

    def subdivide_segment(self, i: int, u: Fraction = Fraction(1, 2)) -> "PLLoop":
        """Insert a vertex at local coordinate u of segment i.

        The geometric loop is unchanged; only the PL structure (and hence
        the uniform parametrization) is refined.
        """
        u = _rat(u)
        if not 0 < u < 1:
            raise ValueError("subdivision point must be interior to the segment")
        i = i % self.num_segments
        a, b = self.segment(i)
        mid = tuple(x + u * (y - x) for x, y in zip(a, b))
        verts = list(self.vertices)
        verts.insert(i + 1, mid)
        return PLLoop(self.space, verts, self.closure)

    # -- class invariants ---------------------------------------------------

    def lattice_class(self) -> tuple[int, ...]:
        """Closure vector; on the torus this is the free homotopy class."""
        return self.closure

    def normal_form(self) -> tuple:
        """Canonical form under marked-point rotation (and deck translation).

        Two loops describe the same unmarked geometric loop exactly when
        their normal forms agree. On the torus, each rotation's lift is
        first translated so its initial vertex lies in [0,1)^d: rotations
        past the wrap differ by the closure translation, which must not
        affect the result.
        """
        n = self.num_segments
        candidates = []
        for r in range(n):
            verts = [self.vertex(r + i) for i in range(n)]
            if isinstance(self.space, Torus):
                shift = tuple(Fraction(c.numerator // c.denominator) for c in verts[0])
                verts = [_sub(p, shift) for p in verts]
            candidates.append(tuple(verts))
        return (min(candidates), self.closure)

    def same_loop(self, other: "PLLoop") -> bool:
        return self.space == other.space and self.normal_form() == other.normal_form()

    # -- serialization -----------------------------------------------------

    def to_json_obj(self) -> dict:
        return {
            "space": space_to_json(self.space),
            "vertices": [[rat_to_json(c) for c in p] for p in self.vertices],
            "closure": list(self.closure),
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "PLLoop":
        space = space_from_json(obj["space"])
        return cls(space, obj["vertices"], obj.get("closure"))

    def __repr__(self) -> str:
        return (
            f"PLLoop({self.space.kind} d={self.space.d}, "
            f"K={self.num_segments}, closure={self.closure})"
        )


def loop_class_torus(loop: PLLoop) -> tuple[int, ...]:
    """Free homotopy class of a torus loop (its lattice closure vector)."""
    if not isinstance(loop.space, Torus):
        raise ValueError("loop does not live on a torus")
    return loop.lattice_class()


class VariationField:
    """A deformation direction for a PL loop.

    The standard flavor assigns a displacement vector to each vertex and
    interpolates affinely along segments; ``deform`` realizes the deformed
    loop at a rational epsilon. The ``tangent`` flavor evaluates to the
    loop's own velocity field and cannot deform (corner velocities are
    two-sided); it exists for exact contraction checks.
    """

    __slots__ = ("loop", "displacements", "is_tangent")

    def __init__(
        self,
        loop: PLLoop,
        displacements: Sequence[Iterable] | None,
        is_tangent: bool = False,
    ) -> None:
        self.loop = loop
        self.is_tangent = is_tangent
        if is_tangent:
            self.displacements = None
            if displacements is not None:
                raise ValueError("tangent variation takes no displacement data")
            return
        if displacements is None:
            raise ValueError("displacement list required")
        d = loop.space.d
        disp = tuple(_as_point(v, d) for v in displacements)
        if len(disp) != loop.num_segments:
            raise ValueError("need exactly one displacement per vertex")
        self.displacements = disp

    @classmethod
    def from_displacements(cls, loop: PLLoop, disps: Sequence[Iterable]) -> "VariationField":
        return cls(loop, disps)

    @classmethod
    def constant(cls, loop: PLLoop, vec: Iterable) -> "VariationField":
        v = tuple(vec)
        return cls(loop, [v] * loop.num_segments)

    @classmethod
    def tangent(cls, loop: PLLoop) -> "VariationField":
        return cls(loop, None, is_tangent=True)

    def displacement(self, i: int) -> Point:
        """Displacement at vertex i (periodic: same at i and i + K)."""
        assert self.displacements is not None
        return self.displacements[i % self.loop.num_segments]

    def value_at(self, t: Fraction) -> Point:
        if self.is_tangent:
            return self.loop.velocity_at(t)
        i, u = self.loop.segment_of(t)
        a = self.displacement(i)
        b = self.displacement(i + 1)
        return tuple(x + u * (y - x) for x, y in zip(a, b))

    def deform(self, eps: Fraction) -> PLLoop:
        """The loop moved by eps times this field; closure is unchanged."""
        if self.is_tangent:
            raise ValueError("tangent variations cannot deform the loop")
        eps = _rat(eps)
        verts = [
            _add(p, _scale(v, eps))
            for p, v in zip(self.loop.vertices, self.displacements)
        ]
        return PLLoop(self.loop.space, verts, self.loop.closure)
