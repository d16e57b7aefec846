"""Holomorphic expression trees, log determinations, and chart maps."""

import cmath
import math

import numpy as np
import pytest

from cechcert.errors import BranchError, DomainError, ShapeError
from cechcert.geometry import CPoint
from cechcert.hexpr import (
    Const,
    Coord,
    Exp,
    IntPower,
    MatExpr,
    Piecewise,
    Product,
    Sum,
    as_monomial,
    heval,
    holomorphy_residual,
    mat_identity,
    mat_mul,
    mat_scalar,
    mon_log,
    piecewise,
    subst,
)
from cechcert.covers import exp_chart


def test_heval_examples():
    p = CPoint.from_complex([2 + 1j, -3])
    assert heval(Const(-1), p) == -1
    assert heval(Coord(0), p) == 2 + 1j
    assert heval(Coord(1), p) == -3
    assert abs(heval(Exp(Const(2j * math.pi)), p) - 1.0) < 1e-15
    e = Product((Const(2.0), IntPower(Coord(0), 3), Coord(1)))
    assert abs(heval(e, p) - 2.0 * (2 + 1j) ** 3 * (-3)) < 1e-12


def test_heval_batch():
    zc = np.array([[1.0 + 0j, 2.0], [3.0, 4.0]])
    out = heval(Sum((Coord(0), Coord(1))), zc)
    assert np.allclose(out, [3.0, 7.0])


def test_int_power_rejects_neg_power_of_zero():
    with pytest.raises(DomainError):
        IntPower(Const(0), -1)
    assert heval(IntPower(Coord(0), -2), CPoint.from_complex([2.0, 1.0])) == 0.25


def test_piecewise_resolution():
    pw = piecewise({0: Const(1), 1: Const(-1)})
    p = CPoint.from_complex([1.0, 1.0])
    assert heval(pw, p, component=0) == 1
    assert heval(pw, p, component=1) == -1
    with pytest.raises(ShapeError):
        heval(pw, p, component=2)
    with pytest.raises(ShapeError):
        heval(pw, p)  # a piecewise expression needs a component


def test_as_monomial():
    c, exps = as_monomial(Product((Const(3j), IntPower(Coord(1), -2), Coord(0))))
    assert c == 3j
    assert exps == {0: 1, 1: -2}
    with pytest.raises(ShapeError):
        as_monomial(Sum((Coord(0), Const(1))))


def test_holomorphy_residual_small_for_polynomials():
    p = CPoint.from_complex([1.3 + 0.2j, -0.7 + 1j])
    e = Sum((Product((Coord(0), Coord(1))), IntPower(Coord(0), 2), Const(5)))
    assert holomorphy_residual(e, p, 1e-4) < 1e-6


def test_holomorphy_residual_flags_conjugate_node():
    class AbsNode:
        def ev(self, zc):
            return np.abs(zc[:, 0]).astype(complex)

    p = CPoint.from_complex([1.0 + 1.0j, 0.5])
    assert holomorphy_residual(AbsNode(), p, 1e-4) > 1e-3


def test_mon_log_examples():
    p = CPoint.from_complex([1.0, 1.0])
    assert abs(mon_log(Const(-1), None, p).at(p) - 1j * math.pi) < 1e-14
    assert abs(mon_log(Const(1), None, p).at(p)) < 1e-14
    q = CPoint.from_complex([2.0 + 0.1j, 1.0])
    ml = mon_log(Coord(0), None, q)
    assert abs(ml.at(q) - cmath.log(2.0 + 0.1j)) < 1e-13


def test_mon_log_follows_representative_branch():
    # near the negative real axis the principal branch would jump; the
    # antipodal cut keeps the determination continuous around the rep
    rep = CPoint.from_complex([-2.0 + 0.01j, 1.0])
    ml = mon_log(Coord(0), None, rep)
    below = CPoint.from_complex([-2.0 - 0.01j, 1.0])
    assert abs(ml.at(rep) - ml.at(below)) < 0.1
    assert abs(cmath.exp(ml.at(below)) - below.z(0)) < 1e-12


def test_mon_log_rejects_zero_cases():
    p = CPoint.from_complex([0.0, 1.0])
    with pytest.raises(BranchError):
        mon_log(Coord(0), None, p)
    with pytest.raises(ShapeError):
        mon_log(Const(0), None, CPoint.from_complex([1.0, 1.0]))


def test_subst_composition():
    e = Product((IntPower(Coord(0), 2), Coord(1)))
    f = subst(e, {0: Sum((Coord(0), Const(1)))})
    p = CPoint.from_complex([2.0, 3.0])
    assert abs(heval(f, p) - (3.0**2) * 3.0) < 1e-12


def test_mat_expr_and_mul():
    a = MatExpr(((Coord(0), Const(1)), (Const(0), Coord(1))))
    b = mat_identity(2)
    prod = mat_mul(a, b)
    p = CPoint.from_complex([2.0, 5.0])
    assert np.allclose(prod.at(p), a.at(p))
    s = mat_scalar(Const(3.0))
    assert s.at(p)[0, 0] == 3.0
    with pytest.raises(ShapeError):
        mat_mul(a, mat_identity(3))


def test_mat_mul_numeric_agreement():
    rng = np.random.default_rng(8)
    a = MatExpr(((Coord(0), Coord(1)), (Const(2.0), IntPower(Coord(0), 2))))
    b = MatExpr(((Const(1.0), Coord(0)), (Coord(1), Const(0))))
    prod = mat_mul(a, b)
    for _ in range(10):
        zc = rng.normal(size=2) + 1j * rng.normal(size=2)
        p = CPoint.from_complex(zc)
        assert np.allclose(prod.at(p), a.at(p) @ b.at(p))


def test_exp_chart_roundtrip():
    chart = exp_chart()
    rng = np.random.default_rng(1)
    pts = chart.domain.sample(200, rng)
    assert chart.roundtrip_residual(pts) < 1e-12
    p = CPoint((0.5, 0.25, -0.5, 0.1))
    w = chart.forward_point(p)
    assert abs(w.z(0) - cmath.exp(1j * p.z(0))) < 1e-14
    back = chart.inverse_point(w)
    assert np.allclose(back.xy, p.xy)
