import json
import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from titsdyn.config import DEFAULT
from titsdyn.errors import GapViolation, NoWitness, NotVeryProximal, PreconditionViolated, SearchFailed
from titsdyn.field import FieldDescriptor
from titsdyn.linalg import Matrix
from titsdyn.pingpong import (SeparatingSet, build_pingpong, certificate_from_json, check_pingpong,
                              find_pingpong_near, find_separating, freeness_oracle, make_very_contracting,
                              near_identity_words, recheck_pingpong)

from conftest import load_fixture

LOOSE = DEFAULT.with_constants(4, 4)
Q5 = FieldDescriptor.padic(5)


def diag(*xs):
    n = len(xs)
    return Matrix.from_exact([[xs[i] if i == j else 0 for j in range(n)] for i in range(n)])


def fixture_mats(name):
    obj = load_fixture(name)
    return [Matrix.from_exact([[Fraction(x) for x in r] for r in m]) for m in obj["matrices"]]


def conj_pair(a, b):
    """diag(100, 1/100) and its conjugate by the rational rotation (a, b)/c."""
    c = math.isqrt(a * a + b * b)
    u = Matrix.from_exact([[Fraction(a, c), Fraction(-b, c)], [Fraction(b, c), Fraction(a, c)]])
    g = diag(100, Fraction(1, 100))
    return [g, u @ g @ u.transpose()]


def test_rotated_pair_certified():
    cert = check_pingpong(fixture_mats("pingpong_rotated_pair.json"), LOOSE)
    assert cert.r == pytest.approx(1 / math.sqrt(2), rel=1e-9)
    assert cert.epsilon == pytest.approx(0.01)
    assert cert.r > 2 * cert.epsilon
    for i in range(2):
        for j in range(2):
            if i != j:
                assert np.all(cert.cross_gap[2 * i:2 * i + 2, 2 * j:2 * j + 2] >= cert.r - 1e-12)
    assert freeness_oracle(cert.elements, 8).free


@pytest.mark.parametrize("name", ["pingpong_duplicated.json", "pingpong_commuting.json"])
def test_degenerate_pairs_refused(name):
    with pytest.raises(GapViolation) as info:
        check_pingpong(fixture_mats(name), LOOSE)
    assert info.value.measured == pytest.approx(0, abs=1e-12)


def test_shared_attractor_refused_by_disjointness():
    # same attracting line, different repelling hyperplanes
    g = Matrix.from_exact([[100, 0], [0, Fraction(1, 100)]])
    h = Matrix.from_exact([[100, 1], [0, Fraction(1, 100)]])
    with pytest.raises(GapViolation):
        check_pingpong([g, h], LOOSE)


def test_non_proximal_element_reported():
    with pytest.raises(NotVeryProximal) as info:
        check_pingpong([diag(100, Fraction(1, 100)), Matrix.from_exact([[1, 1], [0, 1]])], LOOSE)
    assert info.value.index == 1


def test_single_element_allowed():
    cert = check_pingpong([diag(100, Fraction(1, 100))], LOOSE)
    assert cert.m == 1 and cert.r == pytest.approx(1)


def test_oracle_examples():
    sanov = fixture_mats("oracle_sanov_pair.json")
    assert freeness_oracle(sanov, 8).free
    assert freeness_oracle(sanov, 8, method="bfs").free
    res = freeness_oracle(fixture_mats("oracle_commuting_diagonals.json"), 4)
    assert not res.free and res.describe() == "relation a b a^-1 b^-1"
    res = freeness_oracle([Matrix.identity(2)], 1)
    assert not res.free and res.describe() == "relation a"


def test_oracle_finds_braid_relation():
    u = Matrix.from_exact([[1, 1], [0, 1]])
    l = Matrix.from_exact([[1, 0], [-1, 1]])
    res = freeness_oracle([u, l], 6)
    assert not res.free and len(res.relation) == 6


def test_oracle_methods_agree():
    for a, b in [(3, 4), (5, 12)]:
        pair = conj_pair(a, b)
        assert freeness_oracle(pair, 6).free == freeness_oracle(pair, 6, method="bfs").free


def test_certificate_json_recheck():
    cert = check_pingpong(conj_pair(3, 4), LOOSE)
    obj = json.loads(json.dumps(cert.to_json()))
    assert recheck_pingpong(obj).passed
    back = certificate_from_json(obj, LOOSE)
    assert back.r == pytest.approx(cert.r) and back.m == 2
    obj["r"] = 0.99
    assert not recheck_pingpong(obj).passed


def test_separating_set_found(separating_m1):
    assert separating_m1.r > 0.05
    assert len(separating_m1.F) == len(separating_m1.words)


def test_separating_set_fixture_recorded():
    obj = load_fixture("separating_so3.json")
    assert obj["m1"]["r"] > 0.05


def test_separating_search_fails_on_reducible_input():
    with pytest.raises(SearchFailed):
        find_separating([diag(2, 1, Fraction(1, 2))], 1, word_budget=12, restarts=2)
    with pytest.raises(SearchFailed):
        find_separating([Matrix.identity(3)], 1, word_budget=12, restarts=2)


def test_make_very_contracting(separating_m1):
    g = diag(10 ** 4, 1, 1)
    h = make_very_contracting(g, separating_m1)
    C = DEFAULT.archimedean.C
    from titsdyn.dynamics import contraction_data
    eps = contraction_data(g).epsilon
    assert contraction_data(h).epsilon <= C * eps
    assert contraction_data(h.inverse()).epsilon <= C * eps
    with pytest.raises(PreconditionViolated):
        make_very_contracting(diag(2, 1, 1), separating_m1)
    with pytest.raises(NoWitness):
        make_very_contracting(g, SeparatingSet((), (), 1, 0.0))


def _sl3z(rng):
    while True:
        A = rng.integers(-3, 4, (3, 3))
        if round(np.linalg.det(A)) == 1:
            return Matrix.from_exact(A.tolist())


def test_build_pingpong(separating_m2):
    rng = np.random.default_rng(7)
    targets = [_sl3z(rng), _sl3z(rng)]
    gamma = diag(10 ** 8, 1, Fraction(1, 10 ** 8))
    cert = build_pingpong(targets, gamma, separating_m2)
    assert cert.m == 2 and cert.r > 2 * cert.epsilon
    # each element is g_i gamma a_i h_i for the recorded words
    for k, w in enumerate(cert.words):
        gi = separating_m2.words.index(w["g"])
        hi = separating_m2.words.index(w["h"])
        expect = separating_m2.F[gi] @ gamma @ targets[w["target"]] @ separating_m2.F[hi]
        assert expect.exact == cert.elements[k].exact
    assert freeness_oracle(cert.elements, 6).free


def test_build_pingpong_preconditions(separating_m2):
    with pytest.raises(PreconditionViolated):
        build_pingpong([diag(2, 1, 1)], Matrix.from_exact([[2, 1, 0], [1, 1, 0], [0, 0, 1]]), separating_m2)
    with pytest.raises(PreconditionViolated):
        build_pingpong([diag(2, 1, 1)], Matrix.identity(3), separating_m2)


def test_build_pingpong_rank_one(separating_m1):
    cert = build_pingpong([Matrix.identity(3)], diag(10 ** 8, 1, Fraction(1, 10 ** 8)), separating_m1)
    assert cert.m == 1


SL2_GENS = [Matrix.from_exact([[1, 1], [0, 1]]), Matrix.from_exact([[1, 0], [1, 1]]),
            Matrix.from_exact([[5, 0], [0, Fraction(1, 5)]])]


def test_find_pingpong_near():
    res = find_pingpong_near(SL2_GENS, SL2_GENS[:2], 0.3, field=Q5)
    assert res.certificate.m == 2
    assert all(max(s) <= 0.3 for s in res.perturbation_sizes)
    exact = [Matrix.from_exact(x) for x in res.exact_elements]
    assert freeness_oracle(exact, 6).free


def test_near_identity_words_within_delta():
    for w, W, d in near_identity_words(SL2_GENS, 0.3, 4):
        assert d <= 0.3
        assert np.linalg.norm(W.to_float() - np.eye(2), 2) <= 0.3 + 1e-12


def test_find_pingpong_near_failures():
    with pytest.raises(SearchFailed):
        find_pingpong_near(SL2_GENS, SL2_GENS[:2], 0.0, field=Q5)
    with pytest.raises(SearchFailed):
        find_pingpong_near([], SL2_GENS[:2], 0.3)
    with pytest.raises(ValueError):
        find_pingpong_near(SL2_GENS, SL2_GENS[:2], -1.0)


pythagorean = st.sampled_from([(3, 4), (5, 12), (8, 15), (7, 24), (20, 21), (9, 40), (12, 35), (4, 3)])


@settings(max_examples=12)
@given(pythagorean, pythagorean)
def test_certified_tuples_are_free(t1, t2):
    g = diag(100, Fraction(1, 100))
    pair = conj_pair(*t1)
    third = conj_pair(*t2)[1]
    for tup in (pair, [pair[0], pair[1], third]):
        try:
            cert = check_pingpong(tup, LOOSE)
        except (GapViolation, NotVeryProximal):
            continue
        assert freeness_oracle(cert.elements, 5).free
    assert g.exact == pair[0].exact
