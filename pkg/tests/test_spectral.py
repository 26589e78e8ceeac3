import math
import warnings

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trielab.markov_source import MarkovChain, SymmetricChain, entropy_rate
from trielab.spectral import (
    BadExponent,
    _implicit_derivatives,
    contraction_factor,
    lambda_derivatives,
    lambda_of_s,
    multivariate_condition_holds,
    sigma_squared,
    spectral_constants,
)

probs = st.floats(min_value=0.02, max_value=0.98)


@given(probs, probs)
@settings(max_examples=60, deadline=None)
def test_lambda_at_minus_one_is_one(p00, p11):
    chain = MarkovChain(0.5, p00, p11)
    assert abs(lambda_of_s(chain, -1.0) - 1.0) <= 1e-12


def test_lambda_known_values():
    fair = MarkovChain(0.5, 0.5, 0.5)
    # row sums of the s-weighted matrix are 2 * 2^s for the fair chain
    assert abs(lambda_of_s(fair, -2.0) - 0.5) <= 1e-15
    assert abs(lambda_of_s(fair, 0.0) - 2.0) <= 1e-15
    chain = MarkovChain(0.5, 0.6, 0.7)
    # dominant eigenvalue exceeds both diagonal weights
    assert lambda_of_s(chain, -1.5) > max(0.6**1.5, 0.7**1.5)


@given(probs, probs)
@settings(max_examples=40, deadline=None)
def test_first_derivative_is_entropy(p00, p11):
    chain = MarkovChain(0.5, p00, p11)
    lam_dot, _ = lambda_derivatives(chain)
    H, _, _ = entropy_rate(chain)
    assert abs(lam_dot - H) <= 1e-6


@given(probs, probs)
@settings(max_examples=40, deadline=None)
def test_derivatives_match_implicit_closed_form(p00, p11):
    # the implicit-function route differentiates the characteristic polynomial
    # exactly; the numeric route must reproduce it closely
    chain = MarkovChain(0.5, p00, p11)
    lam_dot, lam_ddot = lambda_derivatives(chain)
    ex_dot, ex_ddot = _implicit_derivatives(chain)
    assert abs(lam_dot - ex_dot) <= 1e-8
    assert abs(lam_ddot - ex_ddot) <= 1e-6 * max(1.0, abs(ex_ddot))


def test_sigma_squared_frozen_values(chain67):
    eigen, explicit = sigma_squared(chain67)
    assert abs(explicit - 0.44566789578520777) <= 1e-14
    assert abs(eigen - explicit) <= 1e-8 * explicit
    eigen, explicit = sigma_squared(MarkovChain(0.5, 0.3, 0.8))
    assert abs(explicit - 2.2624763378274286) <= 1e-13
    eigen, explicit = sigma_squared(MarkovChain(0.5, 0.55, 0.55))
    assert abs(explicit - 0.03058545541959633) <= 1e-14


def test_sigma_squared_symmetric_modes():
    fair = MarkovChain(0.5, 0.5, 0.5)
    with pytest.raises(SymmetricChain):
        sigma_squared(fair, mode="strict")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        eigen, explicit = sigma_squared(fair, mode="report")
    assert (eigen, explicit) == (0.0, 0.0)
    assert len(caught) == 1
    with pytest.raises(ValueError):
        sigma_squared(fair, mode="bogus")


def test_sigma_squared_invariant_under_state_swap():
    a = sigma_squared(MarkovChain(0.5, 0.6, 0.7))[1]
    b = sigma_squared(MarkovChain(0.5, 0.7, 0.6))[1]
    assert abs(a - b) <= 1e-13


def test_contraction_factor():
    chain = MarkovChain(0.5, 0.6, 0.7)
    xi3 = contraction_factor(chain, 3.0)
    assert abs(xi3 - 0.7499787858254027) <= 1e-14
    fair = MarkovChain(0.5, 0.5, 0.5)
    assert abs(contraction_factor(fair, 3.0) - 2 ** -0.5) <= 1e-15
    for s in (2.0, 3.5, 0.0):
        with pytest.raises(BadExponent):
            contraction_factor(chain, s)


@given(probs, probs, st.floats(min_value=2.01, max_value=2.99))
@settings(max_examples=40, deadline=None)
def test_contraction_decreasing_in_s(p00, p11, s):
    # larger exponent contracts harder for sub-one weights
    chain = MarkovChain(0.5, p00, p11)
    assert contraction_factor(chain, s + 0.01) <= contraction_factor(chain, s) + 1e-12
    assert contraction_factor(chain, s) < 1.0


def test_multivariate_condition_cases():
    assert multivariate_condition_holds(MarkovChain(0.5, 0.6, 0.7))
    # strongly sticky state 0 with slippery state 1 breaks the 3/2 condition
    assert not multivariate_condition_holds(MarkovChain(0.5, 0.9, 0.2))


def test_spectral_constants_bundle(chain67):
    consts = spectral_constants(chain67)
    H, H0, H1 = entropy_rate(chain67)
    assert consts.H == H and consts.H0 == H0 and consts.H1 == H1
    assert abs(consts.pi0 - 3.0 / 7.0) <= 1e-15
    assert abs(consts.pi1 - 4.0 / 7.0) <= 1e-15
    assert abs(consts.lambda_at(-1.0) - 1.0) <= 1e-12
    assert abs(consts.lam_dot_m1 - H) <= 1e-6
    assert abs(consts.sigma2_explicit - 0.44566789578520777) <= 1e-14
    assert abs(consts.xi(3.0) - 0.7499787858254027) <= 1e-14
    assert consts.condition_39 is True
    bad = spectral_constants(MarkovChain(0.5, 0.9, 0.2))
    assert bad.condition_39 is False
    assert bad.xi(3.0) < 1.0


def test_spectral_constants_symmetric_strict():
    with pytest.raises(SymmetricChain):
        spectral_constants(MarkovChain(0.5, 0.5, 0.5), mode="strict")


def test_second_derivative_step_halving_stability():
    # the Richardson ladder should make the estimate insensitive to the base step
    from trielab.spectral import _richardson3

    chain = MarkovChain(0.5, 0.3, 0.8)

    def f(s):
        return lambda_of_s(chain, s)

    base = 0.05
    a = _richardson3(f, -1.0, base, "second")
    b = _richardson3(f, -1.0, base / 2, "second")
    assert abs(a - b) <= 1e-8 * max(1.0, abs(a))
