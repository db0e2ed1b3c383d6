import math
import warnings
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from titsdyn.affine import AffineElement, certify_free_semigroup
from titsdyn.config import DEFAULT
from titsdyn.field import FieldDescriptor
from titsdyn.errors import CoverGap, InputError, InsufficientData, MissingFreenessPrerequisite, StateExplosion
from titsdyn.growth import (AffineLine, MatrixGroup, Translations, ammel_certificate, ammel_fixture, classify,
                            discrete_net, growth_table, local_ball, semigroup_layers)

F = Fraction
Q101 = FieldDescriptor.padic(101, 20)
SQRT2 = math.sqrt(2)


@pytest.fixture(scope="module")
def ammel():
    amb, sigma, free = ammel_fixture()
    return amb, sigma, ammel_certificate(sigma, amb, free)


def test_discrete_ball():
    amb = Translations([1.0], 2.5)
    ball = local_ball([amb.element(1)], amb, 10)
    assert sorted(x[0] for x in ball) == [-2, -1, 0, 1, 2]
    assert local_ball([amb.element(1)], amb, 0) == [amb.identity()]


def test_two_step_ball_with_sqrt2():
    amb = Translations([1.0, SQRT2], 2.5)
    ball = local_ball([amb.element(1, 0), amb.element(0, 1)], amb, 2)
    # brute force: all sums of at most two steps from {+-1, +-sqrt2} whose every prefix is in the ball
    steps = [(1, 0), (-1, 0), (0, 1), (0, -1)]
    pts = {(0, 0)}
    for s in steps:
        pts.add(s)
        for t in steps:
            x = (s[0] + t[0], s[1] + t[1])
            if abs(x[0] + x[1] * SQRT2) < 2.5:
                pts.add(x)
    assert len(ball) == len(pts) == 11


def test_tables_and_verdicts():
    disc = growth_table([(1,)], Translations([1.0], 2.5), 20)
    assert disc.values[-1] == 5 and classify(disc).verdict == "Bounded"
    ab = growth_table([(1, 0), (0, 1)], Translations([1.0, SQRT2], 10), 30)
    cls = classify(ab)
    assert cls.verdict == "Polynomial" and 0.5 < cls.degree < 2.5
    aff = growth_table([(2, 0), (1, 1)], AffineLine(5), 18)
    cls = classify(aff)
    assert cls.verdict == "Exponential" and cls.rate >= 1.2


def test_generating_set_robustness():
    amb = Translations([1.0, SQRT2], 10)
    t1 = growth_table([(1, 0), (0, 1)], amb, 30)
    t2 = growth_table([(1, 0), (1, 1)], amb, 30)
    assert classify(t1).verdict == classify(t2).verdict == "Polynomial"


def test_dense_fixtures_not_bounded():
    ab = growth_table([(1, 0), (0, 1)], Translations([1.0, SQRT2], 10), 30)
    assert classify(ab).verdict != "Bounded"


def test_insufficient_data():
    with pytest.raises(InsufficientData):
        classify(growth_table([(1,)], Translations([1.0], 2.5), 11))


def test_generator_outside_ball():
    with pytest.raises(InputError):
        growth_table([(3,)], Translations([1.0], 2.5), 4)


def test_state_explosion():
    cfg = DEFAULT.__class__(frontier_cap=10)
    with pytest.raises(StateExplosion):
        growth_table([(2, 0), (1, 1)], AffineLine(5), 8, cfg)


def test_matrix_ambient_small_ball():
    amb = MatrixGroup(2, 0.35)
    t = 0.1
    rot = [[math.cos(t), -math.sin(t)], [math.sin(t), math.cos(t)]]
    vals = growth_table([amb.element(rot)], amb, 12).values
    # rotations by multiples of 0.1 with |angle| * sqrt2 < 0.35: k in -2..2
    assert vals[-1] == 5


@settings(max_examples=15)
@given(st.floats(1.5, 4.0), st.floats(0.0, 2.0))
def test_monotone_in_n_and_R(R, extra):
    small = growth_table([(1, 0), (0, 1)], Translations([1.0, SQRT2], R), 8).values
    large = growth_table([(1, 0), (0, 1)], Translations([1.0, SQRT2], R + extra), 8).values
    assert small[0] == 1
    assert all(x <= y for x, y in zip(small, small[1:]))
    assert all(x <= y for x, y in zip(small, large))


def test_discrete_net_examples():
    amb = Translations([1.0], 2.0)
    net = discrete_net(amb, 1.0)
    assert sorted(x[0] for x in net) == [-2, -1, 0, 1, 2]
    assert len(discrete_net(amb, 5.0)) == 1
    with pytest.warns(UserWarning):
        discrete_net(amb, 1e-4, resolution=0.01)


def test_discrete_net_maximal():
    amb = AffineLine(1.0)
    net = discrete_net(amb, 0.4)
    for i, x in enumerate(net):
        for y in net[i + 1:]:
            assert amb.distance(x, y) >= 0.4
    from titsdyn.growth import hyperbolic_grid
    for b, a in hyperbolic_grid(1.0, 0.1)[::7]:
        g = (F(a).limit_denominator(10 ** 6), F(b).limit_denominator(10 ** 6))
        if amb.gauge(g) <= 1.0:
            assert min(amb.distance(g, c) for c in net) < 0.4 + 0.1


def test_ammel_certificate(ammel):
    amb, sigma, cert = ammel
    assert cert.min_cover_count >= 2
    assert len(set(sigma)) == len(sigma)
    sizes = semigroup_layers(sigma, amb, 12, cap=2 ** 12)
    assert all(s >= 2 ** n for n, s in enumerate(sizes))


def test_ammel_growth_bound(ammel):
    amb, sigma, cert = ammel
    table = growth_table(sigma, amb, 12, stop_at=2 ** 12)
    vals = table.values
    assert all(x <= y for x, y in zip(vals, vals[1:]))
    # nondecreasing, so f(n) >= f(last) for every n past the table end
    assert all(vals[min(n, len(vals) - 1)] >= 2 ** n for n in range(13))


def test_ammel_cover_gap(ammel):
    amb, sigma, cert = ammel
    for k in range(len(sigma)):
        smaller = sigma[:k] + sigma[k + 1:]
        free = certify_free_semigroup([AffineElement(a, b, Q101) for a, b in smaller])
        try:
            ammel_certificate(smaller, amb, free)
        except CoverGap as exc:
            assert exc.count < 2
            return
    pytest.fail("no single removal opened a cover gap")


def test_ammel_prerequisites(ammel):
    amb, sigma, cert = ammel
    with pytest.raises(MissingFreenessPrerequisite):
        ammel_certificate([(1,), (2,)], Translations([1.0], 3.0))
    with pytest.raises(MissingFreenessPrerequisite):
        ammel_certificate(sigma, amb, None)
    with pytest.raises(MissingFreenessPrerequisite):
        ammel_certificate(sigma[:-1], amb, cert.freeness)


def test_table_json():
    t = growth_table([(1,)], Translations([1.0], 2.5), 12)
    obj = t.to_json()
    assert obj["values"] == t.values and obj["ambient"]["kind"] == "translations"
