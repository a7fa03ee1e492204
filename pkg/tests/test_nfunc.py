import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from doublephase.cubes import Cube
from doublephase.errors import BracketError, DomainError, InputError
from doublephase.grid import Grid
from doublephase.nfunc import (
    BRUTE_FORCE,
    CLOSED_FORM,
    Biconjugate,
    ConjugateMode,
    ConjugateNFunction,
    NFunction,
    averaged_nfunction,
    conjugate,
    conjugate_many,
    eval_phi,
    eval_phi_prime,
    power_compose,
)
from doublephase.weights import Constant, Power, PowerClipped, UserGrid, Zero
from doublephase.grid import GridField

# values from 50-digit mpmath evaluation of the same formulas
PHI_15_4_ABSX = 1.3451645350859195819
PHI1_STAR_2_3_AT_1 = 0.34836165729157904017
PHI_STAR_15_4_A01_AT_2 = 1.7296636802601792772


def test_eval_phi_anchors():
    assert eval_phi(NFunction(2, 3, Constant(1.0)), [0.2], 1.0) == pytest.approx(5 / 6, rel=1e-15)
    assert eval_phi(NFunction(2, 3, Zero()), [0.2], 2.0) == pytest.approx(2.0, rel=1e-15)
    nf = NFunction(1.5, 4, Power(1.0))
    assert eval_phi(nf, [0.5], 1.3) == pytest.approx(PHI_15_4_ABSX, rel=1e-14)


def test_eval_phi_rejects_negative_t_and_bad_exponents():
    with pytest.raises(InputError):
        eval_phi(NFunction(2, 3), [0.0], -1.0)
    with pytest.raises(InputError):
        NFunction(3, 2)
    with pytest.raises(InputError):
        NFunction(1.0, 2)


def test_eval_phi_outside_user_grid_is_domain_error():
    g = Grid.box((0.0,), (1.0,), 4)
    nf = NFunction(2, 3, UserGrid(GridField.constant(g, 1.0)))
    with pytest.raises(DomainError):
        eval_phi(nf, [2.0], 1.0)


def test_phi_prime_anchors_and_finite_difference():
    nf = NFunction(2, 3, Constant(1.0))
    assert eval_phi_prime(nf, [0.0], 2.0) == 6.0
    assert eval_phi_prime(NFunction(1.3, 5, Constant(2.0)), [0.0], 0.0) == 0.0
    nf = NFunction(1.5, 4, Power(1.0))
    for t in np.geomspace(0.1, 10, 15):
        h = 1e-5 * t
        fd = (eval_phi(nf, [0.7], t + h) - eval_phi(nf, [0.7], t - h)) / (2 * h)
        assert eval_phi_prime(nf, [0.7], t) == pytest.approx(fd, rel=1e-6)


def test_conjugate_pure_power_is_classical():
    nf = NFunction(2, 3)
    assert conjugate(nf, BRUTE_FORCE, [0.3], 3.0) == pytest.approx(4.5, rel=1e-9)
    assert conjugate(nf, CLOSED_FORM, [0.3], 3.0) == pytest.approx(4.5, rel=1e-15)
    assert conjugate(nf, BRUTE_FORCE, [0.3], 0.0) == 0.0
    assert conjugate(nf, CLOSED_FORM, [0.3], 0.0) == 0.0


def test_conjugate_against_root_oracle():
    nf = NFunction(2, 3, Constant(1.0))
    assert conjugate(nf, BRUTE_FORCE, [0.0], 1.0) == pytest.approx(PHI1_STAR_2_3_AT_1, rel=1e-10)
    nf = NFunction(1.5, 4, Constant(0.1))
    assert conjugate(nf, BRUTE_FORCE, [0.0], 2.0) == pytest.approx(PHI_STAR_15_4_A01_AT_2, rel=1e-10)


def test_conjugate_unit_coefficient_sits_between_closed_form_branches():
    nf = NFunction(2, 3, Constant(1.0))
    v = conjugate(nf, BRUTE_FORCE, [0.0], 1.0)
    cf = conjugate(nf, CLOSED_FORM, [0.0], 1.0)
    assert cf == pytest.approx(min(0.5, 1.0))
    assert 0.25 * cf <= v <= cf


def test_small_cutoff_raises_bracket_error():
    nf = NFunction(2, 3)
    with pytest.raises(BracketError):
        conjugate(nf, ConjugateMode("brute_force", cutoff=1.0), [0.0], 5.0)
    # a large enough cutoff brackets the maximiser t = 5
    assert conjugate(nf, ConjugateMode("brute_force", cutoff=10.0), [0.0], 5.0) == pytest.approx(12.5, rel=1e-9)


def test_conjugate_mode_validation():
    with pytest.raises(InputError):
        ConjugateMode("exact")
    with pytest.raises(InputError):
        ConjugateMode("brute_force", cutoff=-1.0)


@pytest.mark.parametrize("p,q", [(1.5, 2.0), (2.0, 3.0), (2.0, 6.0)])
def test_tabulated_conjugate_matches_pointwise_brute_force(p, q):
    nf = NFunction(p, q)
    a = np.array([0.0, 1e-3, 0.1, 1.0, 100.0, 1e4])
    s = np.geomspace(1e-4, 1e4, 9)
    A, S = np.meshgrid(a, s)
    table = ConjugateNFunction(nf).phi(A, S)
    brute = conjugate_many(nf, A, S)
    np.testing.assert_allclose(table, brute, rtol=1e-9)


@pytest.mark.parametrize("p,q", [(1.5, 2.0), (2.0, 3.0), (2.0, 6.0)])
def test_biconjugate_round_trip(p, q):
    nf = NFunction(p, q)
    a = np.array([0.0, 0.1, 1.0, 100.0])
    t = np.geomspace(1e-3, 1e3, 13)
    A, T = np.meshgrid(a, t)
    np.testing.assert_allclose(Biconjugate(nf).phi(A, T), nf.phi(A, T), rtol=1e-8)


def test_conjugate_indices():
    c = NFunction(2, 3).conjugate()
    assert c.lower == pytest.approx(1.5) and c.upper == pytest.approx(2.0)
    cf = NFunction(2, 3).conjugate(CLOSED_FORM)
    assert (cf.lower, cf.upper) == (c.lower, c.upper)


def test_averaged_nfunction():
    g = Grid.box((0.0,), (1.0,), 64)
    nf = NFunction(2, 3, Constant(0.7))
    m = averaged_nfunction(nf, Cube((0.25,), 0.5), g)
    assert m.abar == 0.7
    nf = NFunction(2, 3, Power(1.0))
    m = averaged_nfunction(nf, Cube((0.0,), 1.0), g)
    # midpoint rule integrates a linear coefficient exactly
    assert m.abar == pytest.approx(0.5, abs=1e-14)
    for t in (0.1, 1.0, 10.0):
        assert m.inverse(m(t)) == pytest.approx(t, rel=1e-8)
    assert m.inverse(0.0) == 0.0
    assert m.table.shape == (512, 2)
    assert np.all(np.diff(m.table[:, 1]) > 0)


def test_averaged_nfunction_empty_cube():
    g = Grid.box((0.0,), (1.0,), 8)
    with pytest.raises(DomainError):
        averaged_nfunction(NFunction(2, 3), Cube((0.01,), 0.02), g)
    with pytest.raises(DomainError):
        averaged_nfunction(NFunction(2, 3), Cube((0.5,), 1.0), g)


def test_power_compose():
    nf = NFunction(2, 3, PowerClipped(0.5))
    a = np.array([0.0, 0.3, 1.0])
    t = np.array([0.5, 1.0, 3.0])
    assert np.array_equal(power_compose(nf, 1.0).phi(a, t), nf.phi(a, t))
    psi = power_compose(NFunction(2, 3), 0.5)
    assert psi.nonconvex
    np.testing.assert_allclose(psi.phi(0.0, t), t / 2, rtol=1e-15)
    assert not power_compose(nf, 0.75).nonconvex


# -- properties ------------------------------------------------------------------

exponents = st.tuples(st.floats(1.05, 4.0), st.floats(0.05, 4.0)).map(lambda pq: (pq[0], pq[0] + pq[1]))
coeff = st.one_of(st.just(0.0), st.floats(1e-6, 1e6))
pos = st.floats(1e-6, 1e6)


@settings(max_examples=300, deadline=None)
@given(exponents, coeff, pos, pos)
def test_index_sandwich_doubling_and_simonenko(pq, a, s, t):
    p, q = pq
    nf = NFunction(p, q)
    f_t, f_st = nf.phi(a, t), nf.phi(a, s * t)
    tol = 1e-12
    assert min(s ** p, s ** q) * f_t <= f_st * (1 + tol)
    assert f_st <= max(s ** p, s ** q) * f_t * (1 + tol)
    assert nf.phi(a, 2 * t) <= 2 ** q * f_t * (1 + tol)
    ratio = nf.dphi(a, t) * t / f_t
    assert p * (1 - tol) <= ratio <= q * (1 + tol)


@settings(max_examples=150, deadline=None)
@given(exponents, coeff, st.floats(1e-3, 1e3), st.floats(1e-3, 1e3))
def test_young_inequality(pq, a, s, t):
    nf = NFunction(*pq)
    star = float(ConjugateNFunction(nf).phi(a, s))
    assert s * t <= (nf.phi(a, t) + star) * (1 + 1e-9)


@settings(max_examples=150, deadline=None)
@given(exponents, coeff, st.floats(1e-3, 1e3))
def test_closed_form_ratio_bounded_in_p_q(pq, a, s):
    # phi is the sum of its two terms and dominates their max, which pins the
    # brute-force conjugate between 2**-p' / q' and 1 times the closed form
    p, q = pq
    nf = NFunction(p, q)
    bf = float(ConjugateNFunction(nf).phi(a, s))
    cf = float(nf.conjugate(CLOSED_FORM).phi(a, s))
    pd, qd = p / (p - 1), q / (q - 1)
    assert 2 ** -pd / qd * cf * (1 - 1e-9) <= bf <= cf * (1 + 1e-9)
