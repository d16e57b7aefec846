"""Evaluable holomorphic expression trees and matrices of them.

The language is deliberately small: constants, coordinates, integer powers,
products, sums, exp, and piecewise-by-component values.  That is enough for
every transition function the certificates use, and small enough that taking a
continuous logarithm of a monomial expression stays decidable.

Expressions evaluate in batch on (m, n) complex coordinate arrays; a CPoint is
converted to a one-row batch.  All nodes are frozen, so equality is structural
and expressions are safe to share.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Union

import numpy as np

from .errors import BranchError, DomainError, ShapeError
from .geometry import CPoint, Region

__all__ = [
    "HExpr",
    "Const",
    "Coord",
    "IntPower",
    "Product",
    "Sum",
    "Exp",
    "Piecewise",
    "piecewise",
    "heval",
    "subst",
    "resolve",
    "as_monomial",
    "holomorphy_residual",
    "MonLog",
    "mon_log",
    "MatExpr",
    "mat_identity",
    "mat_scalar",
    "mat_mul",
    "ChartMap",
]


def _as_batch(z) -> np.ndarray:
    if isinstance(z, CPoint):
        return z.to_complex().reshape(1, -1)
    return np.asarray(z, dtype=complex)


@dataclass(frozen=True)
class Const:
    value: complex

    def ev(self, zc: np.ndarray) -> np.ndarray:
        return np.full(zc.shape[0], complex(self.value))

    def to_jsonable(self):
        v = complex(self.value)
        return {"op": "const", "re": v.real, "im": v.imag}


@dataclass(frozen=True)
class Coord:
    j: int

    def ev(self, zc: np.ndarray) -> np.ndarray:
        return zc[:, self.j]

    def to_jsonable(self):
        return {"op": "coord", "j": self.j}


@dataclass(frozen=True)
class IntPower:
    base: "HExpr"
    k: int

    def __post_init__(self) -> None:
        if self.k < 0 and self.base == Const(0):
            raise DomainError("negative power of the zero constant")

    def ev(self, zc: np.ndarray) -> np.ndarray:
        b = self.base.ev(zc)
        if self.k < 0 and np.any(b == 0):
            raise DomainError("negative power evaluated at a zero of the base")
        return b ** self.k

    def to_jsonable(self):
        return {"op": "pow", "base": self.base.to_jsonable(), "k": self.k}


@dataclass(frozen=True)
class Product:
    factors: tuple

    def ev(self, zc: np.ndarray) -> np.ndarray:
        out = np.ones(zc.shape[0], dtype=complex)
        for f in self.factors:
            out = out * f.ev(zc)
        return out

    def to_jsonable(self):
        return {"op": "prod", "factors": [f.to_jsonable() for f in self.factors]}


@dataclass(frozen=True)
class Sum:
    terms: tuple

    def ev(self, zc: np.ndarray) -> np.ndarray:
        out = np.zeros(zc.shape[0], dtype=complex)
        for t in self.terms:
            out = out + t.ev(zc)
        return out

    def to_jsonable(self):
        return {"op": "sum", "terms": [t.to_jsonable() for t in self.terms]}


@dataclass(frozen=True)
class Exp:
    arg: "HExpr"

    def ev(self, zc: np.ndarray) -> np.ndarray:
        return np.exp(self.arg.ev(zc))

    def to_jsonable(self):
        return {"op": "exp", "arg": self.arg.to_jsonable()}


@dataclass(frozen=True)
class Piecewise:
    """One expression per overlap component; must be resolved before evaluation."""

    cases: tuple  # sorted tuple of (component-id, HExpr)

    def ev(self, zc: np.ndarray) -> np.ndarray:
        raise ShapeError("piecewise expression evaluated without a component")

    def case(self, component: int) -> "HExpr":
        for ci, e in self.cases:
            if ci == component:
                return e
        raise ShapeError(f"no case for component {component}")

    def to_jsonable(self):
        return {
            "op": "piecewise",
            "cases": [{"component": ci, "expr": e.to_jsonable()} for ci, e in self.cases],
        }


HExpr = Union[Const, Coord, IntPower, Product, Sum, Exp, Piecewise]


def piecewise(cases: dict[int, HExpr]) -> Piecewise:
    return Piecewise(tuple(sorted(cases.items())))


def resolve(e: HExpr, component: Optional[int]) -> HExpr:
    """Replace every piecewise node by its case for the given component."""
    if isinstance(e, Piecewise):
        if component is None:
            raise ShapeError("piecewise expression needs a component")
        return resolve(e.case(component), component)
    if isinstance(e, IntPower):
        return IntPower(resolve(e.base, component), e.k)
    if isinstance(e, Product):
        return Product(tuple(resolve(f, component) for f in e.factors))
    if isinstance(e, Sum):
        return Sum(tuple(resolve(t, component) for t in e.terms))
    if isinstance(e, Exp):
        return Exp(resolve(e.arg, component))
    return e


def heval(e: HExpr, z, component: Optional[int] = None):
    """Evaluate at a CPoint (returns a complex scalar) or a complex batch."""
    r = resolve(e, component)
    out = r.ev(_as_batch(z))
    if isinstance(z, CPoint):
        return complex(out[0])
    return out


def subst(e: HExpr, mapping: dict[int, HExpr]) -> HExpr:
    """Replace Coord(j) by mapping[j]; used to compose with chart maps."""
    if isinstance(e, Coord):
        return mapping.get(e.j, e)
    if isinstance(e, IntPower):
        return IntPower(subst(e.base, mapping), e.k)
    if isinstance(e, Product):
        return Product(tuple(subst(f, mapping) for f in e.factors))
    if isinstance(e, Sum):
        return Sum(tuple(subst(t, mapping) for t in e.terms))
    if isinstance(e, Exp):
        return Exp(subst(e.arg, mapping))
    if isinstance(e, Piecewise):
        return Piecewise(tuple((ci, subst(x, mapping)) for ci, x in e.cases))
    return e


def as_monomial(e: HExpr) -> tuple[complex, dict[int, int]]:
    """Decompose into Const * prod_j z_j^{k_j}, or raise ShapeError."""
    if isinstance(e, Const):
        return complex(e.value), {}
    if isinstance(e, Coord):
        return 1.0 + 0.0j, {e.j: 1}
    if isinstance(e, IntPower):
        c, exps = as_monomial(e.base)
        return c ** e.k, {j: k * e.k for j, k in exps.items()}
    if isinstance(e, Product):
        c, exps = 1.0 + 0.0j, {}
        for f in e.factors:
            cf, ef = as_monomial(f)
            c *= cf
            for j, k in ef.items():
                exps[j] = exps.get(j, 0) + k
        return c, {j: k for j, k in exps.items() if k != 0}
    raise ShapeError(f"not a monomial expression: {type(e).__name__}")


def holomorphy_residual(e: HExpr, z: CPoint, h: float, component: Optional[int] = None) -> float:
    """Max over coordinates of the central-difference Wirtinger dbar residual.

    Near zero for holomorphic expressions; order-one for conjugate-analytic
    contamination.
    """
    if h <= 0.0:
        raise DomainError("step must be positive")
    r = resolve(e, component)
    zc = z.to_complex()
    worst = 0.0
    for j in range(z.n):
        ex = np.zeros_like(zc)
        ex[j] = h
        ey = np.zeros_like(zc)
        ey[j] = 1j * h
        batch = np.stack([zc + ex, zc - ex, zc + ey, zc - ey])
        v = r.ev(batch)
        dx = (v[0] - v[1]) / (2.0 * h)
        dy = (v[2] - v[3]) / (2.0 * h)
        worst = max(worst, abs(0.5 * (dx + 1j * dy)))
    return worst


# ---------------------------------------------------------------------------
# Continuous logarithms of monomial expressions


def _log_branch(w: np.ndarray, theta: float) -> np.ndarray:
    """Logarithm with the branch cut at angle theta + pi (opposite theta)."""
    return np.log(w * cmath.exp(-1j * theta)) + 1j * theta


@dataclass(frozen=True)
class MonLog:
    """A log determination of Const * prod z_j^{k_j}, continuous on one
    overlap component.

    The cut for coordinate j is placed antipodal to branch_angles[j] (the
    representative's argument), so the determination stays continuous as long
    as the component keeps arg z_j within pi of that angle.
    """

    coeff_log: complex
    exps: tuple[tuple[int, int], ...]  # sorted (j, k_j)
    branch_angles: tuple[tuple[int, float], ...]  # sorted (j, theta_j)

    def ev(self, zc: np.ndarray) -> np.ndarray:
        angles = dict(self.branch_angles)
        out = np.full(zc.shape[0], complex(self.coeff_log))
        for j, k in self.exps:
            out = out + k * _log_branch(zc[:, j], angles[j])
        return out

    def at(self, z: CPoint) -> complex:
        return complex(self.ev(z.to_complex().reshape(1, -1))[0])

    def to_jsonable(self):
        return {
            "coeff_log": [self.coeff_log.real, self.coeff_log.imag],
            "exps": [list(e) for e in self.exps],
            "branch_angles": [[j, th] for j, th in self.branch_angles],
        }


def mon_log(
    e: HExpr,
    component: Optional[int],
    representative: CPoint,
    rel_perturbation: float = 1e-3,
) -> MonLog:
    """Choose a continuous log of a monomial expression near a representative.

    Validated by round-tripping exp(log) against the expression at the
    representative and 32 deterministic perturbations of it.
    """
    r = resolve(e, component)
    coeff, exps = as_monomial(r)
    if coeff == 0:
        raise ShapeError("cannot take the log of the zero expression")
    zc = representative.to_complex()
    for j in exps:
        if zc[j] == 0:
            raise BranchError(f"representative has z_{j + 1} = 0")
    angles = tuple(sorted((j, float(np.angle(zc[j]))) for j in exps))
    ml = MonLog(cmath.log(coeff), tuple(sorted(exps.items())), angles)
    rng = np.random.default_rng(0)
    scale = rel_perturbation * min([abs(zc[j]) for j in exps], default=1.0)
    pert = rng.normal(size=(32, zc.size)) + 1j * rng.normal(size=(32, zc.size))
    batch = np.concatenate([zc.reshape(1, -1), zc.reshape(1, -1) + scale * pert])
    want = r.ev(batch)
    got = np.exp(ml.ev(batch))
    err = float(np.max(np.abs(got - want)))
    if err > 1e-10 * max(1.0, float(np.max(np.abs(want)))):
        raise BranchError(f"log validation failed with round-trip error {err:.3e}")
    return ml


# ---------------------------------------------------------------------------
# Matrix expressions


@dataclass(frozen=True)
class MatExpr:
    """An r x r matrix of expressions; transitions are required to keep the
    determinant modulus above a configured floor on their domains (checked by
    sampling in the bundle validators, not here)."""

    entries: tuple  # r-tuple of r-tuples of HExpr

    def __post_init__(self) -> None:
        r = len(self.entries)
        if r == 0 or any(len(row) != r for row in self.entries):
            raise ShapeError("matrix expression must be square and nonempty")

    @property
    def r(self) -> int:
        return len(self.entries)

    def ev(self, zc: np.ndarray, component: Optional[int] = None) -> np.ndarray:
        zc = _as_batch(zc)
        r = self.r
        out = np.empty((zc.shape[0], r, r), dtype=complex)
        for a in range(r):
            for b in range(r):
                out[:, a, b] = resolve(self.entries[a][b], component).ev(zc)
        return out

    def at(self, z: CPoint, component: Optional[int] = None) -> np.ndarray:
        return self.ev(z.to_complex().reshape(1, -1), component)[0]

    def to_jsonable(self):
        return {
            "r": self.r,
            "entries": [[e.to_jsonable() for e in row] for row in self.entries],
        }


def mat_identity(r: int) -> MatExpr:
    return MatExpr(
        tuple(tuple(Const(1 if a == b else 0) for b in range(r)) for a in range(r))
    )


def mat_scalar(e: HExpr, r: int = 1) -> MatExpr:
    return MatExpr(tuple(tuple(e if a == b else Const(0) for b in range(r)) for a in range(r)))


def _simp_sum(terms: list) -> HExpr:
    terms = [t for t in terms if t != Const(0)]
    if not terms:
        return Const(0)
    if len(terms) == 1:
        return terms[0]
    return Sum(tuple(terms))


def _simp_prod(a: HExpr, b: HExpr) -> HExpr:
    if a == Const(0) or b == Const(0):
        return Const(0)
    if a == Const(1):
        return b
    if b == Const(1):
        return a
    return Product((a, b))


def mat_mul(A: MatExpr, B: MatExpr) -> MatExpr:
    """Structural matrix product (with trivial 0/1 simplification)."""
    if A.r != B.r:
        raise ShapeError("matrix size mismatch")
    r = A.r
    rows = []
    for a in range(r):
        row = []
        for b in range(r):
            row.append(
                _simp_sum([_simp_prod(A.entries[a][k], B.entries[k][b]) for k in range(r)])
            )
        rows.append(tuple(row))
    return MatExpr(tuple(rows))


# ---------------------------------------------------------------------------
# Chart maps


@dataclass
class ChartMap:
    """A holomorphic map with an explicit inverse on a declared injectivity chart.

    forward: one expression per target coordinate.  inverse_fn: vectorized map
    from (m, n_out) complex arrays back to (m, n_in).  domain: the chart in the
    source space on which the map is injective.
    """

    name: str
    forward: tuple
    inverse_fn: Callable[[np.ndarray], np.ndarray]
    domain: Region

    @property
    def n_out(self) -> int:
        return len(self.forward)

    def forward_complex(self, zc: np.ndarray) -> np.ndarray:
        zc = np.asarray(zc, dtype=complex)
        out = np.empty((zc.shape[0], self.n_out), dtype=complex)
        for j, e in enumerate(self.forward):
            out[:, j] = e.ev(zc)
        return out

    def forward_xy(self, pts: np.ndarray) -> np.ndarray:
        pts = np.asarray(pts, dtype=float)
        zc = pts[:, 0::2] + 1j * pts[:, 1::2]
        wc = self.forward_complex(zc)
        out = np.empty((pts.shape[0], 2 * self.n_out))
        out[:, 0::2] = wc.real
        out[:, 1::2] = wc.imag
        return out

    def forward_point(self, z: CPoint) -> CPoint:
        return CPoint.from_complex(self.forward_complex(z.to_complex().reshape(1, -1))[0])

    def inverse_point(self, w: CPoint) -> CPoint:
        return CPoint.from_complex(self.inverse_fn(w.to_complex().reshape(1, -1))[0])

    def roundtrip_residual(self, pts: np.ndarray) -> float:
        """Max |phi^{-1}(phi(z)) - z| over a batch of chart points."""
        pts = np.asarray(pts, dtype=float)
        zc = pts[:, 0::2] + 1j * pts[:, 1::2]
        back = self.inverse_fn(self.forward_complex(zc))
        return float(np.max(np.abs(back - zc))) if zc.size else 0.0
