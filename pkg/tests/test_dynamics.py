import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from titsdyn.config import DEFAULT
from titsdyn.dynamics import (ContractionData, ProximalityCertificate, VeryProximal, contraction_data,
                              power_proximality, proximality, verify_contraction, very_proximal)
from titsdyn.errors import NoConvergence, NotContracting, NotProximal, RegimeViolation, VerificationFailed
from titsdyn.field import FieldDescriptor
from titsdyn.linalg import Matrix, random_orthogonal, singular_ratio
from titsdyn.projective import act, basis_point, coordinate_hyperplane, distance, distance_to_hyperplane, \
    hausdorff_distance

from conftest import random_contracting

LOOSE = DEFAULT.with_constants(4, 4)


def rotation(t):
    return np.array([[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]])


def test_contraction_data_diagonal():
    d = contraction_data(Matrix.from_exact([[10 ** 4, 0], [0, 1]]))
    assert d.epsilon == pytest.approx(1e-2, rel=1e-6)
    assert distance(d.v_g, basis_point(0, 2)) == pytest.approx(0, abs=1e-12)
    assert hausdorff_distance(d.H_g, coordinate_hyperplane(0, 2)) == pytest.approx(0, abs=1e-12)
    assert d.lipschitz_outside(0.5) == pytest.approx(4e-4, rel=1e-5)


def test_rotation_not_contracting():
    with pytest.raises(NotContracting):
        contraction_data(Matrix.from_rows(rotation(0.3)))


def test_padic_contraction():
    p = 5
    g = Matrix.from_exact([[Fraction(1, p ** 3), 0], [0, 1]], FieldDescriptor.padic(p))
    d = contraction_data(g)
    assert d.epsilon == pytest.approx(p ** -1.5)
    assert float(distance(d.v_g, basis_point(0, 2, g.field))) == 0
    assert verify_contraction(g, d, samples=500).passed


def test_verify_examples():
    g = Matrix.from_exact([[10 ** 4, 0], [0, 1]])
    rep = verify_contraction(g, contraction_data(g))
    assert rep.passed and rep.max_image_distance <= 1e-2 and rep.lipschitz_ok()
    h = Matrix.from_exact([[2, 0], [0, 1]])
    d = contraction_data(h)
    forged = ContractionData(1e-3, d.v_g, d.H_g, d.ratio)
    with pytest.raises(VerificationFailed):
        verify_contraction(h, forged)


def test_proximality_diagonal():
    cert = proximality(Matrix.from_exact([[100, 0, 0], [0, 1, 0], [0, 0, 1]]), LOOSE)
    assert cert.r == pytest.approx(1)
    assert distance(cert.v_bar, basis_point(0, 3)) == pytest.approx(0, abs=1e-9)
    assert hausdorff_distance(cert.H_bar, coordinate_hyperplane(0, 3)) == pytest.approx(0, abs=1e-9)


def test_default_constants_refuse_weak_contraction():
    with pytest.raises(NotProximal):
        proximality(Matrix.from_exact([[100, 0, 0], [0, 1, 0], [0, 0, 1]]))


def test_proximality_conjugate():
    u = rotation(math.pi / 6)
    g = Matrix.from_rows(u @ np.diag([100.0, 1.0]) @ u.T)
    cert = proximality(g, LOOSE)
    target = act(Matrix.from_rows(u), basis_point(0, 2))
    assert distance(cert.v_bar, target) <= 1e-8


@pytest.mark.parametrize("err", [(NotProximal, NoConvergence, NotContracting)])
def test_near_identity_refused(err):
    with pytest.raises(err):
        proximality(Matrix.from_rows([[1 + 1e-12, 0], [0, 1]]))


def test_power_proximality_examples():
    cert = proximality(Matrix.from_exact([[100, 0], [0, 1]]), LOOSE)
    eps, c2 = cert.epsilon, cert.constants.c2
    one = power_proximality(cert, 1)
    assert (one.r, one.epsilon) == pytest.approx((cert.r - 2 * eps, (c2 * eps) ** (1 / 3)))
    three = power_proximality(cert, 3)
    assert three.epsilon == pytest.approx(c2 * eps)
    assert distance(three.v_bar, basis_point(0, 2)) == pytest.approx(0, abs=1e-12)
    with pytest.raises(ValueError):
        power_proximality(cert, 0)


def test_power_bound_against_measurement():
    # rational rotation keeps g exact, so g**10 is computed without rounding
    u = Matrix.from_exact([[Fraction(3, 5), Fraction(-4, 5)], [Fraction(4, 5), Fraction(3, 5)]])
    g = u @ Matrix.from_exact([[100, 0], [0, 1]]) @ u.transpose()
    cert = proximality(g, LOOSE)
    claimed = power_proximality(cert, 10).epsilon
    measured = contraction_data(g.power(10)).epsilon
    assert measured <= claimed


def test_power_regime_violation():
    cert = proximality(Matrix.from_exact([[100, 0], [0, 1]]), DEFAULT.with_constants(4, 4))
    strict = ProximalityCertificate(cert.matrix, cert.r, cert.epsilon, cert.v_bar, cert.H_bar, 0, 0,
                                    DEFAULT.with_constants(10, 4).archimedean, cert.v_g, cert.H_g)
    with pytest.raises(RegimeViolation):
        power_proximality(strict, 2)


def test_very_proximal_examples():
    vp = very_proximal(Matrix.from_exact([[100, 0], [0, Fraction(1, 100)]]), LOOSE)
    assert vp.r == pytest.approx(1) and vp.epsilon == pytest.approx(1e-2)
    with pytest.raises(NotProximal):
        very_proximal(Matrix.from_exact([[1, 1], [0, 1]]))
    p = 3
    g = Matrix.from_exact([[Fraction(1, p ** 4), 0], [0, p ** 4]], FieldDescriptor.padic(p))
    vp = very_proximal(g)
    assert vp.epsilon == pytest.approx(p ** -4.0)
    back = VeryProximal.from_json(vp.to_json())
    assert back.r == vp.r and back.epsilon == vp.epsilon


def test_backward_direction_tagged():
    g = Matrix.from_exact([[100, 0, 0], [0, 100, 0], [0, 0, 1]])
    with pytest.raises(NotProximal) as info:
        very_proximal(g, LOOSE)
    assert info.value.direction == "forward"
    g = Matrix.from_exact([[100, 0, 0], [0, 1, 0], [0, 0, 1]])
    with pytest.raises(NotProximal) as info:
        very_proximal(g, LOOSE)
    assert info.value.direction == "backward"


def test_certificate_json_roundtrip():
    cert = proximality(Matrix.from_exact([[100, 0], [0, 1]]), LOOSE)
    obj = cert.to_json()
    assert obj["kind"] == "proximal" and set(obj["constants"]) == {"c1", "c2", "C"}
    back = ProximalityCertificate.from_json(obj)
    assert back.r == cert.r and back.epsilon == cert.epsilon
    assert distance(back.v_bar, cert.v_bar) == pytest.approx(0, abs=1e-12)


@given(st.integers(0, 2 ** 32 - 1))
def test_fixed_point_transport(seed):
    rng = np.random.default_rng(seed)
    g = random_contracting(rng, 3, 1e6)
    u = Matrix.from_rows(random_orthogonal(rng, 3))
    try:
        cert = proximality(g, LOOSE)
    except NotProximal:
        return
    conj = proximality(u @ g @ u.inverse(), LOOSE)
    assert distance(conj.v_bar, act(u, cert.v_bar)) <= 10 * DEFAULT.tolerance()


@given(st.integers(0, 2 ** 32 - 1))
def test_certificate_invariants(seed):
    rng = np.random.default_rng(seed)
    g = random_contracting(rng, 3, 1e6)
    try:
        cert = proximality(g, LOOSE)
    except NotProximal:
        return
    assert cert.r >= cert.constants.c1 * cert.epsilon
    assert distance(cert.v_bar, cert.v_g) <= cert.epsilon + 1e-9
    assert distance_to_hyperplane(cert.v_bar, cert.H_bar) >= cert.r - 2 * cert.epsilon - 1e-9
    assert cert.fixed_point_residual <= 10 * DEFAULT.tolerance()
