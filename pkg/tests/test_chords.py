from fractions import Fraction as F

import numpy as np
import pytest
from scipy.linalg import expm

from stringtop.brackets import wilson_field_bracket
from stringtop.chords import (
    ChordDiagram,
    DiagramRealization,
    chord_bracket_degree0,
    evaluate_combination,
    evaluate_diagram,
    four_t_combination,
    gln_ideal_element,
    parse_rep,
)
from stringtop.fields import ConstantCommutingConnection
from stringtop.geometry import PLLoop, Torus
from stringtop.strings import TransversalityError, concatenate, intersections

T = Torus(2)


def line(cls, base=(0, 0)):
    return PLLoop(T, [base], closure=cls)


def conn_n(n, seed=0):
    """Random flat connection with a shared non-diagonal eigenbasis."""
    rng = np.random.default_rng(seed)
    d1 = np.diag(rng.uniform(-0.5, 0.5, n)).astype(complex)
    d2 = np.diag(rng.uniform(-0.5, 0.5, n)).astype(complex)
    q, _ = np.linalg.qr(rng.normal(size=(n, n)))
    return ConstantCommutingConnection([q @ d1 @ q.T, q @ d2 @ q.T])


# a (1,0) zigzag that crosses itself once, at (1/2,1/6): parameter 2/9 on
# the first segment against 7/9 on the last, velocities (3,1) and (3,-1)
ZIG = PLLoop(T, [(0, 0), (F(3, 4), F(1, 4)), (F(1, 4), F(1, 4))], closure=(1, 0))
S_A = F(2, 9)
S_B = F(7, 9)


def test_diagram_validation():
    with pytest.raises(ValueError, match="unknown representation"):
        parse_rep("fund:2")
    with pytest.raises(ValueError, match="not matched by any arc"):
        ChordDiagram([("std:2", ("p",))], [])
    with pytest.raises(ValueError, match="pairs .* with itself"):
        ChordDiagram([("std:2", ("p", "q"))], [("p", "p")])
    with pytest.raises(ValueError, match="not matched by any arc"):
        ChordDiagram([("std:2", ("p", "q", "r"))], [("p", "q")])
    with pytest.raises(ValueError, match="two arcs"):
        ChordDiagram([("std:2", ("p", "q", "r"))], [("p", "q"), ("q", "r")])


def test_canonical_rotation():
    d_a = ChordDiagram(
        [("std:2", ("p", "q", "x")), ("std:2", ("y",))],
        [("p", "q"), ("x", "y")],
    )
    d_b = ChordDiagram(
        [("std:2", ("x", "p", "q")), ("std:2", ("y",))],
        [("x", "y"), ("p", "q")],
    )
    assert d_a == d_b
    assert hash(d_a) == hash(d_b)


def test_diagram_json_round_trip():
    d = ChordDiagram(
        [("std:3", ("p", "x")), ("std:3", ("q", "y"))],
        [("p", "q"), ("x", "y")],
    )
    assert ChordDiagram.from_json_obj(d.to_json_obj()) == d


def test_realization_validation():
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([("std:2", ("p",)), ("std:2", ("q",))], [("p", "q")])
    with pytest.raises(ValueError, match="one loop per circle"):
        DiagramRealization(d, [g1], {"p": pt.s, "q": pt.s_bar})
    with pytest.raises(ValueError, match="cover exactly"):
        DiagramRealization(d, [g1, g2], {"p": pt.s})
    with pytest.raises(ValueError, match="outside"):
        DiagramRealization(d, [g1, g2], {"p": F(3, 2), "q": pt.s_bar})
    with pytest.raises(ValueError, match="different points"):
        DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar + F(1, 7)})
    # a (2,0) line meets itself with parallel velocities
    d_self = ChordDiagram([("std:2", ("a", "b"))], [("a", "b")])
    with pytest.raises(TransversalityError, match="tangentially"):
        DiagramRealization(d_self, [line((2, 0))], {"a": F(1, 8), "b": F(5, 8)})


def test_realization_cyclic_order_enforced():
    # params put x between p and q, but the circle lists it after both
    d = ChordDiagram(
        [("std:2", ("p", "q", "x")), ("std:2", ("y",))],
        [("p", "q"), ("x", "y")],
    )
    vert = PLLoop(T, [(F(1, 2), 0)], closure=(0, 1))
    with pytest.raises(ValueError, match="cyclic order"):
        DiagramRealization(
            d, [ZIG, vert], {"p": S_A, "q": S_B, "x": F(1, 2), "y": F(1, 4)}
        )


def test_realization_json_round_trip():
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([("std:2", ("p",)), ("std:2", ("q",))], [("p", "q")])
    r = DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar})
    r2 = DiagramRealization.from_json_obj(r.to_json_obj())
    assert r2.diagram == d
    assert r2.params == r.params
    assert all(a.same_loop(b) for a, b in zip(r2.loops, r.loops))


def test_no_arc_diagram_is_product_of_wilson_loops():
    conn = conn_n(2, 1)
    d = ChordDiagram([("std:2", ()), ("std:2", ())], [])
    r = DiagramRealization(d, [line((1, 0)), line((0, 1))], {})
    want = np.trace(expm(conn.mats[0])) * np.trace(expm(conn.mats[1]))
    assert abs(evaluate_diagram(r, conn) - want) < 1e-12


def test_one_arc_matches_trace_fusion():
    conn = conn_n(2, 1)
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([("std:2", ("p",)), ("std:2", ("q",))], [("p", "q")])
    r = DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar})
    val = evaluate_diagram(r, conn)
    assert abs(val - wilson_field_bracket(g1, g2, conn)) < 1e-12


def test_self_chord_abelian_is_plain_holonomy():
    conn = ConstantCommutingConnection(
        [np.array([[0.25]], dtype=complex), np.array([[-0.1]], dtype=complex)]
    )
    d = ChordDiagram([("std:1", ("a", "b"))], [("a", "b")])
    r = DiagramRealization(d, [ZIG], {"a": S_A, "b": S_B})
    assert abs(evaluate_diagram(r, conn) - np.exp(0.25)) < 1e-14


@pytest.mark.parametrize("n", [2, 3])
def test_self_chord_splits_into_two_circles(n):
    conn = conn_n(n, seed=n + 7)
    d = ChordDiagram([(f"std:{n}", ("a", "b"))], [("a", "b")])
    val = evaluate_diagram(DiagramRealization(d, [ZIG], {"a": S_A, "b": S_B}), conn)
    combo = gln_ideal_element(d, ("a", "b"))
    assert combo[0][0] == 1 and combo[1][0] == -1
    split = combo[1][1]
    assert len(split.circles) == 2 and not split.arcs
    # the crossing cuts the zigzag into a contractible lobe and a (1,0) rest
    xpt = (F(1, 2), F(1, 6))
    lobe = PLLoop(T, [xpt, (F(3, 4), F(1, 4)), (F(1, 4), F(1, 4))], closure=(0, 0))
    rest = PLLoop(T, [xpt, (1, 0)], closure=(1, 0))
    want = evaluate_diagram(DiagramRealization(split, [lobe, rest], {}), conn)
    assert abs(val - want) < 1e-12


@pytest.mark.parametrize("n", [1, 2, 3])
def test_trace_ideal_two_circles(n):
    conn = conn_n(n, seed=n + 3)
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([(f"std:{n}", ("p",)), (f"std:{n}", ("q",))], [("p", "q")])
    combo = gln_ideal_element(d, ("p", "q"))
    chorded = evaluate_diagram(
        DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar}), conn
    )
    merged = combo[1][1]
    assert len(merged.circles) == 1 and not merged.arcs
    smoothed = evaluate_diagram(
        DiagramRealization(merged, [concatenate(g1, g2, pt)], {}), conn
    )
    assert abs(chorded - smoothed) < 1e-10


def test_trace_ideal_identity_connection():
    zero = ConstantCommutingConnection(
        [np.zeros((2, 2), dtype=complex), np.zeros((2, 2), dtype=complex)]
    )
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([("std:2", ("p",)), ("std:2", ("q",))], [("p", "q")])
    chorded = evaluate_diagram(
        DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar}), zero
    )
    merged = gln_ideal_element(d, ("p", "q"))[1][1]
    smoothed = evaluate_diagram(
        DiagramRealization(merged, [concatenate(g1, g2, pt)], {}), zero
    )
    # sum over the chord basis contributes one unit per matrix slot: n each
    assert chorded == pytest.approx(2.0)
    assert smoothed == pytest.approx(2.0)


def test_trace_ideal_fails_for_diagonal_pseudo_rep():
    # the diagonal pseudo-representation drops the off-diagonal units, and
    # the smoothing identity visibly breaks: the relation is gl(n)-specific
    conn = ConstantCommutingConnection(
        [
            np.array([[0.2, 0.1], [0.1, 0.2]], dtype=complex),
            np.array([[0.0, 0.3], [0.3, 0.0]], dtype=complex),
        ]
    )
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    pt = intersections(g1, g2)[0]
    d = ChordDiagram([("diag:2", ("p",)), ("diag:2", ("q",))], [("p", "q")])
    chorded = evaluate_diagram(
        DiagramRealization(d, [g1, g2], {"p": pt.s, "q": pt.s_bar}), conn
    )
    smoothed = evaluate_diagram(
        DiagramRealization(
            ChordDiagram([("diag:2", ())], []), [concatenate(g1, g2, pt)], {}
        ),
        conn,
    )
    assert abs(chorded - smoothed) > 0.01


def test_four_t_validation():
    d = ChordDiagram(
        [("std:2", ("p", "q", "x")), ("std:2", ("y",))],
        [("p", "q"), ("x", "y")],
    )
    with pytest.raises(ValueError, match="is not an arc"):
        four_t_combination(d, "x", ("p", "y"))
    with pytest.raises(ValueError, match="on the chord itself"):
        four_t_combination(d, "p", ("p", "q"))
    with pytest.raises(ValueError, match="not adjacent"):
        four_t_combination(d, "y", ("p", "q"))


@pytest.mark.parametrize("n", [1, 2, 3])
def test_four_t_combination_evaluates_to_zero(n):
    # self-chord (p,q) at the zigzag crossing, moving chord (x,y) out to a
    # vertical line through the same point; x rides at p's parameter in the
    # first two terms and at q's in the last two
    vert = PLLoop(T, [(F(1, 2), 0)], closure=(0, 1))
    conn = conn_n(n, seed=10 + n)
    d = ChordDiagram(
        [(f"std:{n}", ("p", "q", "x")), (f"std:{n}", ("y",))],
        [("p", "q"), ("x", "y")],
    )
    combo = four_t_combination(d, "x", ("p", "q"))
    assert [sign for sign, _ in combo] == [1, -1, 1, -1]
    vals = []
    for k, (sign, term) in enumerate(combo):
        s_x = S_A if k < 2 else S_B
        r = DiagramRealization(
            term, [ZIG, vert], {"p": S_A, "q": S_B, "x": s_x, "y": F(1, 6)}
        )
        vals.append(sign * evaluate_diagram(r, conn))
    assert abs(sum(vals)) < 1e-10
    if n == 1:
        # abelian insertions commute, every term is the same number
        assert max(abs(v - vals[0] * s) for s, v in zip([1, -1, 1, -1], vals)) < 1e-14
    else:
        # the two sides of p differ, cancellation needs all four terms
        assert abs(vals[0] + vals[1]) > 1e-3


def test_chord_bracket_degree0_matches_trace_fusion():
    conn = conn_n(2, 1)
    g1 = line((1, 0))
    g2 = line((0, 1), base=(F(1, 3), F(1, 5)))
    da = ChordDiagram([("std:2", ())], [])
    db = ChordDiagram([("std:2", ())], [])
    ra = DiagramRealization(da, [g1], {})
    rb = DiagramRealization(db, [g2], {})
    combo = chord_bracket_degree0([(1, ra)], [(1, rb)])
    assert len(combo) == 1
    coeff, term = combo[0]
    assert coeff == 1
    assert len(term.diagram.arcs) == 1
    val = evaluate_combination(combo, conn)
    assert abs(val - wilson_field_bracket(g1, g2, conn)) < 1e-9


def test_chord_bracket_degree0_parallel_lines_empty():
    ra = DiagramRealization(ChordDiagram([("std:2", ())], []), [line((1, 0))], {})
    rb = DiagramRealization(
        ChordDiagram([("std:2", ())], []), [line((1, 0), base=(0, F(1, 2)))], {}
    )
    assert chord_bracket_degree0([(1, ra)], [(1, rb)]) == []


def test_chord_bracket_degree0_label_collision():
    d = ChordDiagram([("std:2", ("p", "q"))], [("p", "q")])
    ra = DiagramRealization(d, [ZIG], {"p": S_A, "q": S_B})
    rb = DiagramRealization(
        d, [ZIG.translate((F(1, 3), F(1, 3)))], {"p": S_A, "q": S_B}
    )
    with pytest.raises(ValueError, match="both sides"):
        chord_bracket_degree0([(1, ra)], [(1, rb)])
