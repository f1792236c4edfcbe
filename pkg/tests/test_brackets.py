"""Tests for intersection-localized Wilson brackets and loop-space identities."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from stringtop.brackets import (
    fundamental_identity_check,
    fundamental_identity_paths,
    fundamental_identity_residuals,
    halving_orders,
    loop_form_pairing_sign,
    main_theorem_check,
    main_theorem_sides,
    main_theorem_sign,
    wilson_field_bracket,
    wilson_intersection_weight,
)
from stringtop.fields import ConstantCommutingConnection, FieldConfig, FourierField
from stringtop.geometry import PLLoop, Torus, VariationField
from stringtop.strings import StringCycle

F = Fraction
TORUS = Torus(2)

A1 = np.diag([0.4, -0.3]).astype(complex)
A2 = np.diag([-0.2, 0.5]).astype(complex)


def line(cls, base=(0, 0)):
    return PLLoop(TORUS, [base], closure=cls)


def diag_connection():
    return ConstantCommutingConnection([A1, A2])


def odd_config():
    """Three odd terms: body 1-form, theta-pair 1-forms on both axes."""
    return FieldConfig.build(
        TORUS,
        2,
        2,
        [
            {
                "indices": (1,),
                "eps": (1, 2),
                "field": FourierField.from_dict(2, {(0, 1): 0.3, (1, 0): -0.15}),
                "lie": (1, 2),
            },
            {
                "indices": (2,),
                "field": FourierField.from_dict(2, {(1, 0): 0.4, (0, 1): 0.2j}),
                "lie": (2, 1),
            },
            {
                "indices": (2,),
                "eps": (1, 2),
                "field": FourierField.from_dict(2, {(1, 1): 0.25}),
                "lie": (1, 1),
            },
        ],
        expect_parity=1,
    )


def wiggly_loop():
    return PLLoop(
        TORUS,
        [(0, 0), (F(2, 5), F(1, 10)), (F(1, 2), F(3, 5)), (F(1, 10), F(4, 5))],
        closure=(1, 1),
    )


def generic_variation(loop):
    return VariationField.from_displacements(
        loop,
        [(F(1, 4), F(-1, 8)), (F(1, 16), F(3, 16)), (F(-1, 8), F(1, 8)), (F(0), F(1, 4))],
    )


class _CurvedStub:
    n = 2

    def flatness_residual(self):
        return 1.0


# -- sign conventions ------------------------------------------------------------


def test_named_signs_are_pinned():
    assert wilson_intersection_weight(1) == 1
    assert wilson_intersection_weight(-1) == -1
    assert main_theorem_sign(0, 0, 2) == 1
    assert main_theorem_sign(1, 1, 2) == -1
    assert loop_form_pairing_sign(2) == -1
    with pytest.raises(NotImplementedError):
        wilson_intersection_weight(1, d=3)
    with pytest.raises(NotImplementedError):
        loop_form_pairing_sign(3)


# -- observable bracket -----------------------------------------------------------


def test_bracket_of_generating_classes_is_the_fused_trace():
    conn = diag_connection()
    val = wilson_field_bracket(line((1, 0)), line((0, 1), base=(F(1, 3), F(1, 5))), conn)
    expected = complex(np.trace(expm(A1) @ expm(A2)))
    assert abs(val - expected) <= 1e-12


def test_abelian_bracket_counts_intersections():
    conn = ConstantCommutingConnection(
        [np.array([[0.3]], dtype=complex), np.array([[-0.2]], dtype=complex)]
    )
    val = wilson_field_bracket(line((1, 0)), line((0, 1), base=(F(1, 3), F(1, 5))), conn)
    assert abs(val - np.exp(0.3) * np.exp(-0.2)) <= 1e-12


def test_bracket_of_disjoint_loops_vanishes():
    conn = diag_connection()
    assert wilson_field_bracket(line((1, 0)), line((2, 0), base=(0, F(1, 2))), conn) == 0


def test_bracket_rejects_curved_connections():
    with pytest.raises(ValueError, match="not flat"):
        wilson_field_bracket(line((1, 0)), line((0, 1)), _CurvedStub())


# -- main comparison -----------------------------------------------------------------


@pytest.mark.parametrize(
    "cls1,cls2",
    [((2, 1), (1, 2)), ((1, 0), (2, 0)), ((-1, 2), (3, 1)), ((2, 1), (1, 1))],
)
def test_sides_match_the_commuting_closed_form(cls1, cls2):
    conn = diag_connection()
    a = StringCycle.from_loop(line(cls1))
    b = StringCycle.from_loop(line(cls2, base=(F(1, 3), F(1, 5))))
    lhs, rhs = main_theorem_sides(a, b, conn)
    m, n = cls1
    p, q = cls2
    closed = (m * q - n * p) * complex(np.trace(expm((m + p) * A1 + (n + q) * A2)))
    scale = max(1.0, abs(lhs), abs(rhs))
    assert abs(lhs - rhs) / scale <= 1e-12
    assert abs(lhs - closed) / scale <= 1e-12


def test_parallel_classes_cancel_on_both_sides():
    conn = diag_connection()
    a = StringCycle.from_loop(line((1, 0)))
    b = StringCycle.from_loop(line((2, 0), base=(0, F(1, 2))))
    lhs, rhs = main_theorem_sides(a, b, conn)
    assert lhs == 0 and rhs == 0


def test_three_dimensional_fibers_agree():
    conn = ConstantCommutingConnection(
        [np.diag([0.3, -0.1, 0.2]).astype(complex), np.diag([0.1, 0.4, -0.3]).astype(complex)]
    )
    a = StringCycle.from_loop(line((1, 1)))
    b = StringCycle.from_loop(line((1, -1), base=(F(1, 3), F(1, 5))))
    assert main_theorem_check(a, b, conn) <= 1e-9


def test_zero_cycle_gives_zero_residual():
    conn = diag_connection()
    zero = StringCycle.zero(TORUS)
    assert main_theorem_check(zero, StringCycle.from_loop(line((1, 0))), conn) == 0


def test_sides_require_matching_spaces():
    conn = diag_connection()
    a = StringCycle.from_loop(line((1, 0)))
    b = StringCycle.from_loop(PLLoop(Torus(3), [(0, 0, 0)], closure=(0, 1, 0)))
    with pytest.raises(ValueError, match="different spaces"):
        main_theorem_sides(a, b, conn)


# -- fundamental identity ---------------------------------------------------------


def test_identity_residual_and_convergence_order():
    conn = diag_connection()
    cfg = odd_config()
    loop = wiggly_loop()
    v = generic_variation(loop)
    assert fundamental_identity_check(conn, cfg, loop, v, eps=F(1, 1000)) <= 5e-7
    sched = [F(1, 100), F(1, 200), F(1, 400)]
    residuals = fundamental_identity_residuals(conn, cfg, loop, v, eps_schedule=sched)
    orders = halving_orders(residuals)
    assert len(orders) == 2 and all(o >= 1.9 for o in orders)
    refined = fundamental_identity_residuals(
        conn, cfg, loop, v, eps_schedule=sched, refine=True
    )
    assert max(refined) <= 5e-8


def test_identity_is_trivial_without_insertion_fields():
    conn = diag_connection()
    empty = FieldConfig(TORUS, 2, 2, ())
    loop = wiggly_loop()
    p1, p2 = fundamental_identity_paths(conn, empty, loop, generic_variation(loop))
    assert p1.norm() == 0 and p2.norm() == 0


def test_tangent_variations_kill_both_paths():
    conn = diag_connection()
    loop = wiggly_loop()
    p1, p2 = fundamental_identity_paths(
        conn, odd_config(), loop, VariationField.tangent(loop)
    )
    assert p1.norm() == 0
    assert p2.norm() <= 1e-12


def test_variation_must_be_attached_to_the_loop():
    conn = diag_connection()
    loop = wiggly_loop()
    other = line((1, 1))
    v = VariationField.constant(other, (F(1, 8), F(0)))
    with pytest.raises(ValueError, match="not attached"):
        fundamental_identity_paths(conn, odd_config(), loop, v)


def test_halving_orders_guard_the_noise_floor():
    assert halving_orders([4e-4, 1e-4]) == [2.0]
    assert halving_orders([1e-10, 1e-11]) == []
