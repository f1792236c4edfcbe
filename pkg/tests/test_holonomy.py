"""Tests for plain/generalized transport, insertions, and patch gluing."""

from __future__ import annotations

import functools
import math
from fractions import Fraction

import numpy as np
import pytest
from scipy.linalg import expm

from stringtop.fields import (
    ConstantCommutingConnection,
    FieldConfig,
    FourierField,
    ZeroConnection,
)
from stringtop.geometry import PLLoop, Torus, VariationField
from stringtop.grassmann import GradedCoefficient
from stringtop.holonomy import (
    PatchSchedule,
    QuadratureError,
    TransportPlan,
    TwoPatchConnection,
    extract_leg_coefficient,
    gen_transport,
    glued_wilson,
    insertion_derivative,
    transport,
    wilson,
)

F = Fraction
TORUS = Torus(2)


def wiggly_loop():
    return PLLoop(
        TORUS,
        [(0, 0), (F(2, 5), F(1, 10)), (F(1, 2), F(3, 5)), (F(1, 10), F(4, 5))],
        closure=(1, 1),
    )


def diag_connection():
    return ConstantCommutingConnection(
        [np.diag([0.2 + 0j, -0.1]), np.diag([-0.3 + 0j, 0.15])]
    )


def mixed_config(n_theta=2):
    """One body-level 1-form and one theta-pair 1-form; odd parity throughout."""
    return FieldConfig.build(
        TORUS,
        2,
        n_theta,
        [
            {
                "indices": (1,),
                "field": FourierField.from_dict(2, {(1, 0): 0.4, (0, 1): 0.2j}),
                "lie": (1, 2),
            },
            {
                "indices": (2,),
                "eps": (1, 2),
                "field": FourierField.from_dict(2, {(0, 1): 0.3}),
                "lie": (2, 1),
            },
        ],
        expect_parity=1,
    )


@functools.lru_cache(maxsize=None)
def reference_transport():
    return gen_transport(
        diag_connection(),
        mixed_config(),
        wiggly_loop(),
        plan=TransportPlan(steps=512, richardson=1),
    )


@functools.lru_cache(maxsize=None)
def default_transport():
    return gen_transport(diag_connection(), mixed_config(), wiggly_loop())


# -- plain transport -----------------------------------------------------------


def test_plain_transport_closed_forms():
    conn = diag_connection()
    line = PLLoop(TORUS, [(0, 0)], closure=(2, 1))
    expected = expm(2 * conn.mats[0] + conn.mats[1])
    assert np.max(np.abs(transport(conn, line) - expected)) <= 1e-13
    # commuting factors telescope along any representative of the class
    expected = expm(conn.mats[0] + conn.mats[1])
    assert np.max(np.abs(transport(conn, wiggly_loop()) - expected)) <= 1e-12


def test_plain_transport_composes_exactly_off_grid():
    conn = diag_connection()
    loop = wiggly_loop()
    u_full = transport(conn, loop)
    u_split = transport(conn, loop, F(0), F(1, 3)) @ transport(conn, loop, F(1, 3), F(1))
    assert np.max(np.abs(u_split - u_full)) <= 1e-13


def test_transport_parameter_validation():
    with pytest.raises(ValueError, match="0 <= s <= t <= 1"):
        transport(diag_connection(), wiggly_loop(), F(1, 2), F(1, 4))


# -- generalized transport ------------------------------------------------------


def test_gen_transport_without_field_matches_plain():
    conn = diag_connection()
    loop = wiggly_loop()
    u_gen = gen_transport(conn, None, loop)
    assert u_gen.n_gen == 0
    assert np.max(np.abs(u_gen.body() - transport(conn, loop))) == 0.0
    with pytest.raises(ValueError, match="variations require"):
        gen_transport(conn, None, loop, variations=[VariationField.tangent(loop)])
    with pytest.raises(ValueError, match="sizes differ"):
        gen_transport(ConstantCommutingConnection([np.eye(3), np.eye(3)]), mixed_config(), loop)


def test_zero_form_terms_do_not_enter_transports():
    conn = diag_connection()
    loop = wiggly_loop()
    cfg = FieldConfig.build(
        TORUS, 2, 2, [{"eps": (1,), "field": FourierField.from_dict(2, {(1, 0): 1.0}), "lie": (1, 2)}]
    )
    u_gen = gen_transport(conn, cfg, loop)
    assert np.max(np.abs(u_gen.body() - transport(conn, loop))) == 0.0
    assert list(u_gen.components) == [0]


def test_one_insertion_closed_form():
    # A = 0 and C = theta1 theta2 dx^1 E_11 on the class-(1,0) line:
    # the resummed series truncates at I + (net x^1 displacement) theta1 theta2 E_11.
    line = PLLoop(TORUS, [(0, 0)], closure=(1, 0))
    cfg = FieldConfig.build(
        TORUS, 2, 2, [{"indices": (1,), "eps": (1, 2), "field": 1.0, "lie": (1, 1)}]
    )
    u_gen = gen_transport(ZeroConnection(2, 2), cfg, line)
    assert sorted(u_gen.components) == [0, 3]
    assert np.max(np.abs(u_gen.components[0] - np.eye(2))) <= 1e-14
    e11 = np.zeros((2, 2))
    e11[0, 0] = 1.0
    assert np.max(np.abs(u_gen.components[3] - e11)) <= 1e-12


def test_convergence_is_second_order_with_richardson_on_top():
    ref = reference_transport()
    errs = [
        gen_transport(
            diag_connection(),
            mixed_config(),
            wiggly_loop(),
            plan=TransportPlan(steps=s, richardson=0),
        ).distance(ref)
        for s in (16, 32, 64)
    ]
    orders = [math.log2(errs[i] / errs[i + 1]) for i in range(2)]
    assert all(p >= 1.9 for p in orders)
    assert default_transport().distance(ref) <= 1e-9


def test_gen_transport_composes_off_grid():
    conn = diag_connection()
    cfg = mixed_config()
    loop = wiggly_loop()
    u_split = gen_transport(conn, cfg, loop, F(0), F(1, 3)) @ gen_transport(
        conn, cfg, loop, F(1, 3), F(1)
    )
    assert u_split.distance(default_transport()) <= 1e-9


def test_wilson_is_parametrization_and_marking_invariant():
    conn = diag_connection()
    cfg = mixed_config()
    loop = wiggly_loop()
    w = wilson(conn, cfg, loop)
    assert wilson(conn, cfg, loop.subdivide_segment(0, F(1, 3))).distance(w) <= 1e-10
    assert wilson(conn, cfg, loop.rotate_marked(2)).distance(w) <= 1e-12


def test_wilson_is_gauge_invariant():
    conn = diag_connection()
    cfg = mixed_config()
    loop = wiggly_loop()
    g = np.array([[1.0, 0.3], [-0.5, 1.0]])
    w = wilson(conn, cfg, loop)
    assert wilson(conn.gauge(g), cfg.gauge(g), loop).distance(w) <= 1e-12


def test_extra_theta_generators_do_not_change_values():
    w2 = wilson(diag_connection(), mixed_config(2), wiggly_loop())
    w3 = wilson(diag_connection(), mixed_config(3), wiggly_loop())
    assert w2.with_generators(3).distance(w3) <= 1e-15


def test_tolerance_driven_refinement_and_cap():
    conn = diag_connection()
    cfg = mixed_config()
    loop = wiggly_loop()
    refined = gen_transport(
        conn, cfg, loop, plan=TransportPlan(steps=16, richardson=1, tol=1e-10)
    )
    assert refined.distance(reference_transport()) <= 1e-10
    with pytest.raises(QuadratureError, match="no convergence"):
        gen_transport(
            conn, cfg, loop, plan=TransportPlan(steps=16, tol=1e-30, max_steps=64)
        )


def test_transport_plan_validation():
    with pytest.raises(ValueError, match="step counts"):
        TransportPlan(steps=0)
    with pytest.raises(ValueError, match="step counts"):
        TransportPlan(steps=128, max_steps=64)
    with pytest.raises(ValueError, match="richardson"):
        TransportPlan(richardson=2)


# -- variation legs -------------------------------------------------------------


def test_tangent_legs_drop_out_of_two_forms():
    # substituting dx -> gammadot dt + w gammadot pairs the velocity with
    # itself antisymmetrically; the residual is pure rounding noise
    conn = diag_connection()
    cfg = FieldConfig.build(
        TORUS,
        2,
        1,
        [
            {
                "indices": (1, 2),
                "eps": (1,),
                "field": FourierField.from_dict(2, {(1, 0): 0.7}),
                "lie": (1, 2),
            },
            {
                "indices": (1,),
                "field": FourierField.from_dict(2, {(0, 1): 0.4}),
                "lie": (2, 1),
            },
        ],
        expect_parity=1,
    )
    loop = wiggly_loop()
    w = wilson(conn, cfg, loop, variations=[VariationField.tangent(loop)])
    assert extract_leg_coefficient(w, 1, 1).norm() <= 1e-15


def test_extract_leg_coefficient_signs():
    # stored canonically as theta_1 w_1; the legs-left presentation w_1 theta_1
    # flips the sign, while leg-free monomials are dropped
    value = GradedCoefficient.from_masks({0b11: 5.0, 0b01: 7.0, 0b10: 2.0}, 2)
    out = extract_leg_coefficient(value, 1, 1)
    assert out == GradedCoefficient.from_masks({0b1: -5.0, 0b0: 2.0}, 1)


# -- insertion derivative --------------------------------------------------------


def test_insertion_derivative_closed_form():
    # A = 0, no transport field: the integrand is tr M_eta(t), and for
    # eta = theta1 theta2 dx^1 E_11 that integrates to the net x^1 displacement
    line = PLLoop(TORUS, [(0, 0)], closure=(1, 0))
    eta = FieldConfig.build(
        TORUS, 2, 2, [{"indices": (1,), "eps": (1, 2), "field": 1.0, "lie": (1, 1)}]
    )
    out = insertion_derivative(ZeroConnection(2, 2), None, line, eta)
    assert out.distance(GradedCoefficient.from_masks({0b11: 1.0}, 2)) <= 1e-12


def test_insertion_derivative_rejects_mismatched_shapes():
    eta = FieldConfig.build(
        TORUS, 2, 1, [{"indices": (1,), "eps": (1,), "field": 1.0, "lie": (1, 1)}]
    )
    with pytest.raises(ValueError, match="shape differs"):
        insertion_derivative(diag_connection(), mixed_config(2), wiggly_loop(), eta)


# -- two-patch gluing -------------------------------------------------------------


def two_patch_setup():
    conn0 = diag_connection()
    cfg0 = mixed_config()
    t12 = np.array([[1.0, 0.3], [-0.5, 1.0]])
    t21 = np.linalg.inv(t12)
    conn1 = ConstantCommutingConnection([t21 @ m @ t12 for m in conn0.mats])
    cfg1 = cfg0.gauge(t21)
    return conn0, conn1, t12, cfg0, cfg1


def test_patch_schedule_validation():
    with pytest.raises(ValueError, match="increase from 0 to 1"):
        PatchSchedule((F(0), F(2, 3), F(1, 3), F(1)), (0, 1, 0))
    with pytest.raises(ValueError, match="one patch per interval"):
        PatchSchedule((F(0), F(1, 2), F(1)), (0, 1, 0))
    with pytest.raises(ValueError, match="switch patches"):
        PatchSchedule((F(0), F(1, 2), F(1)), (0, 0))
    sched = PatchSchedule((F(0), F(1, 3), F(2, 3), F(1)), (0, 1, 0))
    with pytest.raises(ValueError, match="interior"):
        sched.moved(0, F(1, 100))
    with pytest.raises(ValueError, match="exceeds the overlap"):
        sched.moved(1, F(1, 10))
    assert sched.moved(1, F(1, 30)).boundaries[1] == F(1, 3) + F(1, 30)


def test_two_patch_constructor_validates_compatibility():
    conn0, conn1, t12, cfg0, cfg1 = two_patch_setup()
    with pytest.raises(ValueError, match="cocycle"):
        TwoPatchConnection(conn0, conn1, t12, t21=np.eye(2) * 2.0)
    with pytest.raises(ValueError, match="incompatible on overlap"):
        TwoPatchConnection(conn0, conn0, t12)
    with pytest.raises(ValueError, match="both patches or neither"):
        TwoPatchConnection(conn0, conn1, t12, config0=cfg0)
    with pytest.raises(ValueError, match="insertion fields incompatible"):
        TwoPatchConnection(conn0, conn1, t12, config0=cfg0, config1=cfg0)


def test_glued_wilson_matches_single_patch():
    conn0, conn1, t12, cfg0, cfg1 = two_patch_setup()
    tp = TwoPatchConnection(conn0, conn1, t12, config0=cfg0, config1=cfg1)
    loop = wiggly_loop()
    sched = PatchSchedule((F(0), F(1, 3), F(2, 3), F(1)), (0, 1, 0))
    glued = glued_wilson(tp, loop, sched)
    assert glued.distance(wilson(conn0, cfg0, loop)) <= 1e-9
    moved = glued_wilson(tp, loop, sched.moved(1, F(1, 30)))
    assert moved.distance(glued) <= 1e-10


def test_glued_wilson_without_insertions():
    conn0, conn1, t12, _, _ = two_patch_setup()
    tp = TwoPatchConnection(conn0, conn1, t12)
    loop = wiggly_loop()
    sched = PatchSchedule((F(0), F(1, 3), F(2, 3), F(1)), (0, 1, 0))
    plain = complex(np.trace(transport(conn0, loop)))
    out = glued_wilson(tp, loop, sched)
    assert out.distance(GradedCoefficient.scalar(plain, 0)) <= 1e-13


def test_glued_wilson_requires_matching_end_patches():
    conn0, conn1, t12, _, _ = two_patch_setup()
    tp = TwoPatchConnection(conn0, conn1, t12)
    sched = PatchSchedule((F(0), F(1, 2), F(1)), (0, 1))
    with pytest.raises(ValueError, match="same patch"):
        glued_wilson(tp, wiggly_loop(), sched)
