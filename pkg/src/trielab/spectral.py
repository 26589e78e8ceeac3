"""Spectral constants of the source: dominant eigenvalue of (p_ij^{-s}) and friends.

For a two-state chain the matrix P(s) = (p_ij^{-s}) has largest eigenvalue

    lambda(s) = (T + sqrt(T^2 - 4 D)) / 2,
    T = p00^{-s} + p11^{-s},   D = (p00 p11)^{-s} - (p01 p10)^{-s},

with discriminant rewritten as (p00^{-s} - p11^{-s})^2 + 4 (p01 p10)^{-s},
which is nonnegative term by term and free of cancellation.  At s = -1 the
matrix is the transition matrix itself, so lambda(-1) = 1 and the first
derivative equals the entropy rate H.  The limit variance constant is

    sigma^2 = (lambda''(-1) - lambda'(-1)^2) / lambda'(-1)^3,

with an equivalent explicit form in the transition probabilities; computing
both and comparing is the module's built-in error bar.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

from trielab.markov_source import (
    MarkovChain,
    SymmetricChain,
    entropy_rate,
    stationary_distribution,
)


class BadExponent(ValueError):
    """Contraction factor requested outside the admissible range (2, 3]."""


def lambda_of_s(chain: MarkovChain, s: float) -> float:
    """Largest eigenvalue of (p_ij^{-s}); always real for a valid chain."""
    a = chain.p00 ** (-s)
    d = chain.p11 ** (-s)
    cross = (chain.p01 * chain.p10) ** (-s)
    disc = (a - d) ** 2 + 4.0 * cross
    return 0.5 * (a + d + math.sqrt(disc))


def _implicit_derivatives(chain: MarkovChain, s: float = -1.0) -> tuple[float, float]:
    """Exact lambda', lambda'' by differentiating lambda^2 - T lambda + D = 0.

    Closed-form route, independent of any difference scheme; the tests use it
    to certify the finite-difference estimates below.
    """
    la, lb = math.log(chain.p00), math.log(chain.p11)
    lc = math.log(chain.p00 * chain.p11)
    ld = math.log(chain.p01 * chain.p10)
    a = chain.p00 ** (-s)
    b = chain.p11 ** (-s)
    prod = (chain.p00 * chain.p11) ** (-s)
    cross = (chain.p01 * chain.p10) ** (-s)
    lam = 0.5 * (a + b + math.sqrt((a - b) ** 2 + 4.0 * cross))
    t_dot = -(la * a + lb * b)
    t_ddot = la * la * a + lb * lb * b
    d_dot = -(lc * prod - ld * cross)
    d_ddot = lc * lc * prod - ld * ld * cross
    denom = 2.0 * lam - (a + b)  # = sqrt(discriminant) > 0
    lam_dot = (t_dot * lam - d_dot) / denom
    lam_ddot = (t_ddot * lam + 2.0 * t_dot * lam_dot - d_ddot - 2.0 * lam_dot**2) / denom
    return lam_dot, lam_ddot


def _richardson3(f, s: float, h: float, scheme: str) -> float:
    """Two Richardson levels over step halvings of a central difference.

    Both the first-difference and second-difference stencils have error series
    in even powers of h, so the (4, 16) elimination weights apply to each.
    """
    def estimate(step: float) -> float:
        if scheme == "first":
            return (f(s + step) - f(s - step)) / (2.0 * step)
        return (f(s + step) - 2.0 * f(s) + f(s - step)) / (step * step)

    d0, d1, d2 = estimate(h), estimate(h / 2.0), estimate(h / 4.0)
    r0 = (4.0 * d1 - d0) / 3.0
    r1 = (4.0 * d2 - d1) / 3.0
    return (16.0 * r1 - r0) / 15.0


def lambda_derivatives(chain: MarkovChain) -> tuple[float, float]:
    """Central-difference (lambda'(-1), lambda''(-1)) with Richardson extrapolation.

    The first derivative uses base step 1e-4.  The second difference divides
    by h^2, so rounding noise grows like eps/h^2 and a step that small would
    drown the signal; its base step is therefore O(1) scaled by the largest
    |log p_ij| so that truncation stays below rounding for any valid chain.
    """
    f = lambda s: lambda_of_s(chain, s)
    lam_dot = _richardson3(f, -1.0, 1e-4, "first")
    scale = max(
        1.0,
        abs(math.log(chain.p00)),
        abs(math.log(chain.p01)),
        abs(math.log(chain.p10)),
        abs(math.log(chain.p11)),
    )
    lam_ddot = _richardson3(f, -1.0, 0.1 / scale, "second")
    return lam_dot, lam_ddot


def sigma_squared(chain: MarkovChain, mode: str = "strict") -> tuple[float, float]:
    """Variance constant two ways: (eigenvalue form, explicit form).

    The eigenvalue form is (lambda'' - lambda'^2)/lambda'^3 at s = -1 from the
    difference scheme; the explicit form is the closed expression in the
    transition probabilities.  They agree to ~1e-9 relative, so their spread
    certifies the numerics.  A symmetric chain degenerates (sigma^2 = 0):
    strict mode raises SymmetricChain, report mode warns and returns zeros.
    """
    if mode not in ("strict", "report"):
        raise ValueError(f"mode must be 'strict' or 'report', got {mode!r}")
    if not chain.is_asymmetric:
        if mode == "strict":
            chain.require_asymmetric()
        warnings.warn(
            "symmetric chain: variance constant degenerates to 0", stacklevel=2
        )
        return 0.0, 0.0
    lam_dot, lam_ddot = lambda_derivatives(chain)
    eigen = (lam_ddot - lam_dot * lam_dot) / lam_dot**3
    h, h0, h1 = entropy_rate(chain)
    pi0, pi1 = stationary_distribution(chain)
    shift = (h1 - h0) / (chain.p01 + chain.p10)
    term0 = pi0 * chain.p00 * chain.p01 * (math.log(chain.p00 / chain.p01) + shift) ** 2
    term1 = pi1 * chain.p10 * chain.p11 * (math.log(chain.p10 / chain.p11) + shift) ** 2
    explicit = (term0 + term1) / h**3
    return float(eigen), float(explicit)


def contraction_factor(chain: MarkovChain, s: float) -> float:
    """xi(s) = max over states of p^{s/2} + (1-p)^{s/2}, for s in (2, 3]."""
    if not 2.0 < s <= 3.0:
        raise BadExponent(f"s must lie in (2, 3], got {s}")
    half = 0.5 * s
    xi0 = chain.p00**half + chain.p01**half
    xi1 = chain.p11**half + chain.p10**half
    return max(xi0, xi1)


def multivariate_condition_holds(chain: MarkovChain) -> bool:
    """Joint-convergence condition: (p00 v p11)^{3/2} + (1 - p00 ^ p11)^{3/2} < 1.

    Strictly stronger than xi(3) < 1; chains like (p00, p11) = (0.9, 0.2)
    contract marginally yet fail this joint condition.
    """
    hi = max(chain.p00, chain.p11)
    lo = min(chain.p00, chain.p11)
    return hi**1.5 + (1.0 - lo) ** 1.5 < 1.0


@dataclass(frozen=True)
class SpectralConstants:
    """Bundle of the analytic constants for one chain."""

    chain: MarkovChain
    H: float
    H0: float
    H1: float
    pi0: float
    pi1: float
    lam_dot_m1: float
    lam_ddot_m1: float
    sigma2_eigen: float
    sigma2_explicit: float

    def lambda_at(self, s: float) -> float:
        return lambda_of_s(self.chain, s)

    def xi(self, s: float) -> float:
        return contraction_factor(self.chain, s)

    @property
    def condition_39(self) -> bool:
        return multivariate_condition_holds(self.chain)


def spectral_constants(chain: MarkovChain, mode: str = "strict") -> SpectralConstants:
    """Evaluate every constant once; `mode` governs the symmetric case."""
    h, h0, h1 = entropy_rate(chain)
    pi0, pi1 = stationary_distribution(chain)
    lam_dot, lam_ddot = lambda_derivatives(chain)
    s2_eigen, s2_explicit = sigma_squared(chain, mode=mode)
    return SpectralConstants(
        chain=chain,
        H=float(h),
        H0=float(h0),
        H1=float(h1),
        pi0=pi0,
        pi1=pi1,
        lam_dot_m1=lam_dot,
        lam_ddot_m1=lam_ddot,
        sigma2_eigen=s2_eigen,
        sigma2_explicit=s2_explicit,
    )
