"""Coefficient fields, flat connections, and Grassmann-valued form fields.

A field configuration is an inhomogeneous differential form on a flat
space with values in n x n matrices tensored with a Grassmann algebra:

    C = sum_terms  f(x) * dx^{mu_1} ... dx^{mu_k} * theta_S * E,

with f a scalar coefficient function (polynomial on a chart, finite
Fourier sum on a torus), the mu's strictly increasing, theta_S a Grassmann
monomial, and E a constant matrix. Internally the form and Grassmann
factors are one monomial in a single exterior algebra whose generators
are ordered [dx^1 .. dx^d, theta_1 .. theta_N]: all Koszul signs reduce
to ``merge_sign`` on bitmasks, and the exterior derivative is left
multiplication by dx^mu paired with d/dx^mu on the coefficient.

The obstruction field of a configuration C against a flat connection A is

    B = dC + A C + C A + C C,

computed term by term in that algebra. When C has odd total parity
(form degree + Grassmann degree odd per term) and A is a 1-form, B is
even. Vanishing of B is exactly the condition for generalized transports
of C to be deformation invariant, which the holonomy layer tests.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np

from stringtop.geometry import Chart, Space, Torus
from stringtop.grassmann import merge_sign
from stringtop.lierep import SuperMatrix

_ZERO_TOL = 0.0  # coefficient fields drop exact zeros only


# ---------------------------------------------------------------------------
# scalar coefficient fields


def _clean_terms(terms: Mapping[tuple[int, ...], complex]) -> tuple:
    out = []
    for key, val in terms.items():
        val = complex(val)
        if val != 0:
            out.append((tuple(int(k) for k in key), val))
    out.sort(key=lambda kv: kv[0])
    return tuple(out)


@dataclass(frozen=True)
class PolyField:
    """Polynomial function on R^d: sum_e c_e prod_mu x_mu^{e_mu}."""

    d: int
    terms: tuple[tuple[tuple[int, ...], complex], ...]

    @classmethod
    def from_dict(cls, d: int, terms: Mapping[tuple[int, ...], complex]) -> "PolyField":
        for key in terms:
            if len(key) != d or any(e < 0 for e in key):
                raise ValueError(f"bad exponent tuple {key}")
        return cls(d, _clean_terms(terms))

    @classmethod
    def constant(cls, d: int, value: complex) -> "PolyField":
        return cls.from_dict(d, {(0,) * d: value})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(not any(e) for e, _ in self.terms)

    def constant_value(self) -> complex:
        return sum((v for e, v in self.terms if not any(e)), 0j)

    def evaluate(self, point: Sequence) -> complex:
        xs = [float(x) for x in point]
        total = 0j
        for exps, coeff in self.terms:
            mono = 1.0
            for x, e in zip(xs, exps):
                if e:
                    mono *= x**e
            total += coeff * mono
        return total

    def derivative(self, mu: int) -> "PolyField":
        out: dict[tuple[int, ...], complex] = {}
        for exps, coeff in self.terms:
            e = exps[mu]
            if e == 0:
                continue
            new = list(exps)
            new[mu] = e - 1
            key = tuple(new)
            out[key] = out.get(key, 0j) + e * coeff
        return PolyField.from_dict(self.d, out)

    def scale(self, s: complex) -> "PolyField":
        return PolyField.from_dict(self.d, {e: s * v for e, v in self.terms})

    def __add__(self, other: "PolyField") -> "PolyField":
        out = {e: v for e, v in self.terms}
        for e, v in other.terms:
            out[e] = out.get(e, 0j) + v
        return PolyField.from_dict(self.d, out)

    def __mul__(self, other):
        if isinstance(other, PolyField):
            out: dict[tuple[int, ...], complex] = {}
            for e1, v1 in self.terms:
                for e2, v2 in other.terms:
                    key = tuple(a + b for a, b in zip(e1, e2))
                    out[key] = out.get(key, 0j) + v1 * v2
            return PolyField.from_dict(self.d, out)
        if isinstance(other, FourierField):
            if self.is_constant:
                return other.scale(self.constant_value())
            if other.is_constant:
                return self.scale(other.constant_value())
            raise TypeError("cannot multiply a polynomial by a non-constant Fourier field")
        return NotImplemented

    def coeff_norm(self) -> float:
        return sum(abs(v) for _, v in self.terms)

    def key(self) -> tuple:
        return ("poly", self.d, self.terms)

    def to_json_obj(self) -> dict:
        return {
            "kind": "poly",
            "terms": [
                {"exps": list(e), "re": v.real, "im": v.imag} for e, v in self.terms
            ],
        }


@dataclass(frozen=True)
class FourierField:
    """Finite Fourier sum on the torus: sum_m c_m exp(2 pi i m.x)."""

    d: int
    terms: tuple[tuple[tuple[int, ...], complex], ...]

    @classmethod
    def from_dict(cls, d: int, terms: Mapping[tuple[int, ...], complex]) -> "FourierField":
        for key in terms:
            if len(key) != d:
                raise ValueError(f"bad frequency tuple {key}")
        return cls(d, _clean_terms(terms))

    @classmethod
    def constant(cls, d: int, value: complex) -> "FourierField":
        return cls.from_dict(d, {(0,) * d: value})

    @property
    def is_zero(self) -> bool:
        return not self.terms

    @property
    def is_constant(self) -> bool:
        return all(not any(f) for f, _ in self.terms)

    def constant_value(self) -> complex:
        return sum((v for f, v in self.terms if not any(f)), 0j)

    def evaluate(self, point: Sequence) -> complex:
        xs = [float(x) for x in point]
        total = 0j
        for freqs, coeff in self.terms:
            phase = sum(m * x for m, x in zip(freqs, xs))
            total += coeff * cmath.exp(2j * cmath.pi * phase)
        return total

    def derivative(self, mu: int) -> "FourierField":
        out = {
            freqs: 2j * cmath.pi * freqs[mu] * coeff
            for freqs, coeff in self.terms
            if freqs[mu] != 0
        }
        return FourierField.from_dict(self.d, out)

    def scale(self, s: complex) -> "FourierField":
        return FourierField.from_dict(self.d, {f: s * v for f, v in self.terms})

    def __add__(self, other: "FourierField") -> "FourierField":
        out = {f: v for f, v in self.terms}
        for f, v in other.terms:
            out[f] = out.get(f, 0j) + v
        return FourierField.from_dict(self.d, out)

    def __mul__(self, other):
        if isinstance(other, FourierField):
            out: dict[tuple[int, ...], complex] = {}
            for f1, v1 in self.terms:
                for f2, v2 in other.terms:
                    key = tuple(a + b for a, b in zip(f1, f2))
                    out[key] = out.get(key, 0j) + v1 * v2
            return FourierField.from_dict(self.d, out)
        if isinstance(other, PolyField):
            if other.is_constant:
                return self.scale(other.constant_value())
            if self.is_constant:
                return other.scale(self.constant_value())
            raise TypeError("cannot multiply a Fourier field by a non-constant polynomial")
        return NotImplemented

    def coeff_norm(self) -> float:
        return sum(abs(v) for _, v in self.terms)

    def key(self) -> tuple:
        return ("fourier", self.d, self.terms)

    def to_json_obj(self) -> dict:
        return {
            "kind": "fourier",
            "terms": [
                {"freqs": list(f), "re": v.real, "im": v.imag} for f, v in self.terms
            ],
        }


CoeffField = PolyField | FourierField


def coeff_field_from_json(obj: dict, d: int) -> CoeffField:
    kind = obj["kind"]
    if kind == "poly":
        return PolyField.from_dict(
            d, {tuple(t["exps"]): complex(t["re"], t.get("im", 0.0)) for t in obj["terms"]}
        )
    if kind == "fourier":
        return FourierField.from_dict(
            d, {tuple(t["freqs"]): complex(t["re"], t.get("im", 0.0)) for t in obj["terms"]}
        )
    raise ValueError(f"unknown coefficient field kind {kind!r}")


def constant_field(space: Space, value: complex) -> CoeffField:
    """A constant function in the natural field class of the space."""
    if isinstance(space, Torus):
        return FourierField.constant(space.d, value)
    return PolyField.constant(space.d, value)


def natural_field(space: Space, terms: Mapping[tuple[int, ...], complex]) -> CoeffField:
    if isinstance(space, Torus):
        return FourierField.from_dict(space.d, terms)
    return PolyField.from_dict(space.d, terms)


# ---------------------------------------------------------------------------
# flat connections


class ZeroConnection:
    """The trivial connection A = 0 on a rank-n bundle."""

    def __init__(self, n: int, d: int) -> None:
        self.n = n
        self.d = d

    @property
    def mats(self) -> tuple[np.ndarray, ...]:
        return tuple(np.zeros((self.n, self.n), dtype=complex) for _ in range(self.d))

    @property
    def is_zero(self) -> bool:
        return True

    def matrix_of(self, velocity: Sequence) -> np.ndarray:
        return np.zeros((self.n, self.n), dtype=complex)

    def gauge(self, g: np.ndarray) -> "ZeroConnection":
        return self

    def flatness_residual(self) -> float:
        return 0.0


class ConstantCommutingConnection:
    """A = sum_mu A_mu dx^mu with constant pairwise-commuting matrices.

    dA = 0 for constant coefficients and A ^ A = sum_{mu<nu} [A_mu, A_nu]
    dx^mu dx^nu, so pairwise commutation is exactly flatness; it is
    validated at construction.
    """

    def __init__(self, mats: Sequence[np.ndarray]) -> None:
        self.mats = tuple(np.asarray(m, dtype=complex) for m in mats)
        if not self.mats:
            raise ValueError("need at least one direction matrix")
        self.n = self.mats[0].shape[0]
        self.d = len(self.mats)
        for m in self.mats:
            if m.shape != (self.n, self.n):
                raise ValueError("connection matrices must share one square shape")
        residual = self.flatness_residual()
        scale = max(max(float(np.max(np.abs(m))) for m in self.mats), 1.0)
        if residual > 1e-12 * scale:
            raise ValueError(
                f"direction matrices do not commute (flatness residual {residual:.3e})"
            )

    @property
    def is_zero(self) -> bool:
        return not any(m.any() for m in self.mats)

    def matrix_of(self, velocity: Sequence) -> np.ndarray:
        out = np.zeros((self.n, self.n), dtype=complex)
        for v, m in zip(velocity, self.mats):
            out += float(v) * m
        return out

    def gauge(self, g: np.ndarray) -> "ConstantCommutingConnection":
        ginv = np.linalg.inv(g)
        return ConstantCommutingConnection([g @ m @ ginv for m in self.mats])

    def flatness_residual(self) -> float:
        worst = 0.0
        for i in range(self.d):
            for j in range(i + 1, self.d):
                comm = self.mats[i] @ self.mats[j] - self.mats[j] @ self.mats[i]
                worst = max(worst, float(np.max(np.abs(comm))))
        return worst


FlatConnection = ZeroConnection | ConstantCommutingConnection


# ---------------------------------------------------------------------------
# field configurations


class FieldTerm(NamedTuple):
    mask: int  # bits 0..d-1: dx factors; bits d..d+n_theta-1: theta factors
    field: CoeffField
    mat: np.ndarray


class FieldConfig:
    """Sum of matrix-valued form terms with Grassmann coefficients."""

    __slots__ = ("space", "n", "n_theta", "terms")

    def __init__(
        self,
        space: Space,
        n: int,
        n_theta: int,
        terms: Iterable[FieldTerm] = (),
        expect_parity: int | None = None,
    ) -> None:
        self.space = space
        self.n = n
        self.n_theta = n_theta
        clean = []
        for term in terms:
            mask, field, mat = term
            mat = np.asarray(mat, dtype=complex)
            if mat.shape != (n, n):
                raise ValueError("matrix part has wrong shape")
            if mask >> (space.d + n_theta):
                raise ValueError("term uses generators beyond dx and theta ranges")
            if field.d != space.d:
                raise ValueError("coefficient field dimension mismatch")
            if field.is_zero or not mat.any():
                continue
            if expect_parity is not None and mask.bit_count() % 2 != expect_parity:
                raise ValueError(
                    f"term parity {mask.bit_count() % 2} != required {expect_parity}"
                )
            clean.append(FieldTerm(int(mask), field, mat))
        self.terms = tuple(clean)

    # -- construction helpers ------------------------------------------------

    @classmethod
    def build(
        cls,
        space: Space,
        n: int,
        n_theta: int,
        term_specs: Iterable[dict],
        expect_parity: int | None = None,
    ) -> "FieldConfig":
        """Terms as dicts: indices (1-based dx), eps (1-based theta), field, lie.

        ``field`` may be a CoeffField or a bare constant; ``lie`` may be an
        (i, j) 1-based matrix-unit pair or an explicit matrix.
        """
        d = space.d
        terms = []
        for spec in term_specs:
            indices = tuple(spec.get("indices", ()))
            eps = tuple(spec.get("eps", ()))
            if any(not 1 <= mu <= d for mu in indices):
                raise ValueError(f"dx index out of range in {indices}")
            if len(set(indices)) != len(indices) or tuple(sorted(indices)) != indices:
                raise ValueError("dx indices must be strictly increasing")
            if any(not 1 <= a <= n_theta for a in eps):
                raise ValueError(f"theta index out of range in {eps}")
            if len(set(eps)) != len(eps) or tuple(sorted(eps)) != eps:
                raise ValueError("theta indices must be strictly increasing")
            mask = 0
            for mu in indices:
                mask |= 1 << (mu - 1)
            for a in eps:
                mask |= 1 << (d + a - 1)
            field = spec["field"]
            if not isinstance(field, (PolyField, FourierField)):
                field = constant_field(space, complex(field))
            lie = spec["lie"]
            if isinstance(lie, tuple) and len(lie) == 2 and isinstance(lie[0], int):
                mat = np.zeros((n, n), dtype=complex)
                mat[lie[0] - 1, lie[1] - 1] = 1.0
            else:
                mat = np.asarray(lie, dtype=complex)
            terms.append(FieldTerm(mask, field, mat))
        return cls(space, n, n_theta, terms, expect_parity)

    def form_degree_bits(self, mask: int) -> tuple[int, ...]:
        d = self.space.d
        return tuple(b for b in range(d) if mask >> b & 1)

    def theta_mask(self, mask: int) -> int:
        return mask >> self.space.d

    # -- algebra ---------------------------------------------------------------

    def __add__(self, other: "FieldConfig") -> "FieldConfig":
        if (self.space, self.n, self.n_theta) != (other.space, other.n, other.n_theta):
            raise ValueError("incompatible field configurations")
        return FieldConfig(
            self.space, self.n, self.n_theta, self.terms + other.terms
        ).simplify()

    def scale(self, s: complex) -> "FieldConfig":
        return FieldConfig(
            self.space,
            self.n,
            self.n_theta,
            [FieldTerm(m, f, s * mat) for m, f, mat in self.terms],
        )

    def gauge(self, g: np.ndarray) -> "FieldConfig":
        """Conjugate the matrix part of every term by a constant g."""
        ginv = np.linalg.inv(g)
        return FieldConfig(
            self.space,
            self.n,
            self.n_theta,
            [FieldTerm(m, f, g @ mat @ ginv) for m, f, mat in self.terms],
        )

    def simplify(self) -> "FieldConfig":
        """Merge terms sharing (monomial, coefficient field); drop zeros."""
        grouped: dict[tuple, FieldTerm] = {}
        order: list[tuple] = []
        for mask, field, mat in self.terms:
            key = (mask, field.key())
            if key in grouped:
                old = grouped[key]
                grouped[key] = FieldTerm(mask, field, old.mat + mat)
            else:
                grouped[key] = FieldTerm(mask, field, mat)
                order.append(key)
        return FieldConfig(
            self.space, self.n, self.n_theta, [grouped[k] for k in order]
        )

    @property
    def is_zero(self) -> bool:
        return not self.simplify().terms

    def norm(self) -> float:
        return max(
            (f.coeff_norm() * float(np.max(np.abs(m))) for _, f, m in self.terms),
            default=0.0,
        )

    def max_form_degree(self) -> int:
        return max((len(self.form_degree_bits(m)) for m, _, _ in self.terms), default=0)

    # -- serialization ----------------------------------------------------------

    def to_json_obj(self) -> dict:
        from stringtop.geometry import space_to_json

        out_terms = []
        for mask, field, mat in self.terms:
            out_terms.append(
                {
                    "indices": [b + 1 for b in self.form_degree_bits(mask)],
                    "eps": [
                        a + 1 for a in range(self.n_theta) if self.theta_mask(mask) >> a & 1
                    ],
                    "field": field.to_json_obj(),
                    "lie": [
                        [[v.real, v.imag] for v in row] for row in np.asarray(mat)
                    ],
                }
            )
        return {
            "space": space_to_json(self.space),
            "n": self.n,
            "n_theta": self.n_theta,
            "terms": out_terms,
        }

    @classmethod
    def from_json_obj(cls, obj: dict) -> "FieldConfig":
        from stringtop.geometry import space_from_json

        space = space_from_json(obj["space"])
        n = int(obj["n"])
        specs = []
        for t in obj["terms"]:
            mat = np.array(
                [[complex(re, im) for re, im in row] for row in t["lie"]], dtype=complex
            )
            specs.append(
                {
                    "indices": tuple(t["indices"]),
                    "eps": tuple(t["eps"]),
                    "field": coeff_field_from_json(t["field"], space.d),
                    "lie": mat,
                }
            )
        return cls.build(space, n, int(obj["n_theta"]), specs)

    def __repr__(self) -> str:
        return (
            f"FieldConfig({self.space.kind} d={self.space.d}, n={self.n}, "
            f"n_theta={self.n_theta}, terms={len(self.terms)})"
        )


def eval_field(
    config: FieldConfig, point: Sequence, vectors: Sequence[Sequence]
) -> SuperMatrix:
    """Evaluate the degree-k part on k vectors at a point.

    Terms whose form degree differs from len(vectors) contribute nothing;
    selecting the degree is the caller's job. The form monomial pairs with
    the vectors through det[v_b^{mu_a}].
    """
    k = len(vectors)
    vecs = [np.array([float(c) for c in v]) for v in vectors]
    comps: dict[int, np.ndarray] = {}
    for mask, field, mat in config.terms:
        bits = config.form_degree_bits(mask)
        if len(bits) != k:
            continue
        if k == 0:
            pairing = 1.0
        else:
            rows = np.array([[vecs[b][mu] for b in range(k)] for mu in bits])
            pairing = float(np.linalg.det(rows)) if k > 1 else float(rows[0, 0])
        value = field.evaluate(point) * pairing
        if value == 0:
            continue
        tm = config.theta_mask(mask)
        if tm in comps:
            comps[tm] = comps[tm] + value * mat
        else:
            comps[tm] = value * mat
    return SuperMatrix(config.n, config.n_theta, comps)


def field_obstruction(config: FieldConfig, conn: FlatConnection) -> FieldConfig:
    """B = dC + AC + CA + CC in the unified exterior algebra.

    The exterior derivative inserts dx^mu from the left (sign from sorting
    mu into the monomial, theta factors never crossed); the connection
    wedges act by left and right matrix multiplication with the same
    monomial signs; the quadratic term multiplies all term pairs.
    Vanishing of B makes generalized transports of C invariant under loop
    deformations.
    """
    d = config.space.d
    out: list[FieldTerm] = []
    for mask, field, mat in config.terms:
        for mu in range(d):
            bit = 1 << mu
            if mask & bit:
                continue
            df = field.derivative(mu)
            if df.is_zero:
                continue
            sign = merge_sign(bit, mask)
            out.append(FieldTerm(mask | bit, df.scale(sign), mat))
    if not conn.is_zero:
        for mu, a_mu in enumerate(conn.mats):
            if not a_mu.any():
                continue
            bit = 1 << mu
            for mask, field, mat in config.terms:
                if mask & bit:
                    continue
                out.append(
                    FieldTerm(mask | bit, field.scale(merge_sign(bit, mask)), a_mu @ mat)
                )
                out.append(
                    FieldTerm(mask | bit, field.scale(merge_sign(mask, bit)), mat @ a_mu)
                )
    for m1, f1, mat1 in config.terms:
        for m2, f2, mat2 in config.terms:
            if m1 & m2:
                continue
            sign = merge_sign(m1, m2)
            out.append(FieldTerm(m1 | m2, (f1 * f2).scale(sign), mat1 @ mat2))
    return FieldConfig(config.space, config.n, config.n_theta, out).simplify()
