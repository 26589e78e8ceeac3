"""Acceptance gate: eleven end-to-end checks at pinned tolerances.

Each test prints one summary line "criterion K: PASS/FAIL - detail" before
asserting, so a transcript shows the whole scorecard.  Two bounds are kept
at their pinned values even though the measured behavior cannot meet them:
criterion 8's KS limit (the asymptotic scale is off by the still-dominant
linear variance term at n = 2048) and criterion 9's final-value limit (the
resampling map amplifies bootstrap mean noise, so the KS trace rises again
after contracting).  Those two tests are expected failures in the honest
sense: the assertions are real and they are red.  See the README section on
known failures.
"""

import math
import time

import numpy as np
import pytest
from scipy import stats

from trielab.clt_harness import (
    SimulationConfig,
    apply_T,
    fit_variance_growth,
    ks_distance,
    ks_two_sample,
    simulate_epl,
    standardization_parameters,
    standardize,
    uniform_cloud,
)
from trielab.exact_moments import (
    compute_moment_table,
    error_term_table,
    mean_for_initial,
    variance_for_initial,
)
from trielab.markov_source import MarkovChain, entropy_rate, replicate_seed
from trielab.poisson_analysis import (
    check_mean_decomposition,
    check_variance_decomposition,
)
from trielab.spectral import (
    contraction_factor,
    lambda_derivatives,
    lambda_of_s,
    multivariate_condition_holds,
    sigma_squared,
)


def report(num, ok, detail):
    print(f"criterion {num}: {'PASS' if ok else 'FAIL'} - {detail}")
    return ok


@pytest.fixture(scope="module")
def three_tables(chain67, table67):
    """Moment tables for the named chain trio, horizon 2^13."""
    others = [MarkovChain(0.5, 0.3, 0.8), MarkovChain(0.5, 0.55, 0.55)]
    tables = [(chain67, table67)]
    tables += [(c, compute_moment_table(c, 8192)) for c in others]
    return tables


def test_criterion_01_spectral_sweep():
    rng = np.random.default_rng(12345)
    ps = rng.uniform(0.05, 0.95, (800, 2))
    hard = rng.uniform(0.05, 0.95, (200, 2))
    which = rng.integers(0, 2, 200)
    low = rng.integers(0, 2, 200)
    extreme = np.where(low == 0, rng.uniform(0.005, 0.05, 200),
                       rng.uniform(0.95, 0.995, 200))
    hard[np.arange(200), which] = extreme
    chains = np.vstack([ps, hard])
    start = time.perf_counter()
    worst_lam = worst_dot = worst_rel = 0.0
    checked = 0
    for p00, p11 in chains:
        if abs(p00 - 0.5) < 1e-3 and abs(p11 - 0.5) < 1e-3:
            continue
        chain = MarkovChain(0.5, float(p00), float(p11))
        worst_lam = max(worst_lam, abs(lambda_of_s(chain, -1.0) - 1.0))
        H, _, _ = entropy_rate(chain)
        lam_dot, _ = lambda_derivatives(chain)
        worst_dot = max(worst_dot, abs(lam_dot - H))
        eigen, explicit = sigma_squared(chain)
        worst_rel = max(worst_rel, abs(eigen - explicit) / abs(explicit))
        checked += 1
    elapsed = time.perf_counter() - start
    ok = (worst_lam <= 1e-12 and worst_dot <= 1e-6 and worst_rel <= 1e-8
          and elapsed < 5.0)
    assert report(
        1, ok,
        f"{checked} chains, worst |lambda(-1)-1| {worst_lam:.2e}, "
        f"worst |lambda_dot-H| {worst_dot:.2e}, worst sigma2 rel {worst_rel:.2e}, "
        f"{elapsed:.2f}s",
    )


def _truncated_split_moments(n_max, depth):
    """Exhaustive split-tree enumeration for the fair chain, depth-capped.

    Every internal node splits its k strings Binomial(k, 1/2); moments come
    from iterating that split relation `depth` levels down with zero beyond
    the cap.  No level-n feedback solve is involved, so this is an
    independent route to the same quantities.
    """
    mean_next = np.zeros(n_max + 1)
    sec_next = np.zeros(n_max + 1)
    pmf = {n: stats.binom.pmf(np.arange(n + 1), n, 0.5) for n in range(2, n_max + 1)}
    for _ in range(depth):
        mean_cur = np.zeros(n_max + 1)
        sec_cur = np.zeros(n_max + 1)
        for n in range(2, n_max + 1):
            k = np.arange(n + 1)
            w = pmf[n]
            m = n + float(np.dot(w, mean_next[k] + mean_next[n - k]))
            s = (n * n + 2.0 * n * (m - n)
                 + float(np.dot(w, sec_next[k] + sec_next[n - k]
                                + 2.0 * mean_next[k] * mean_next[n - k])))
            mean_cur[n] = m
            sec_cur[n] = s
        mean_next, sec_next = mean_cur, sec_cur
    return mean_next, sec_next


def test_criterion_02_brute_force_oracle():
    fair = MarkovChain(0.5, 0.5, 0.5)
    table = compute_moment_table(fair, 16)
    brute_mean, brute_sec = _truncated_split_moments(12, 48)
    worst = 0.0
    for n in range(13):
        worst = max(worst, abs(table.nu[0][n] - brute_mean[n]),
                    abs(table.m2[0][n] - brute_sec[n]))
    ok = worst <= 1e-8
    assert report(2, ok, f"n <= 12, worst moment deviation {worst:.2e}")


def test_criterion_03_monte_carlo_calibration(chain67, table67):
    start = time.perf_counter()
    m = 20000
    worst_z = 0.0
    var_dev = None
    for n in (16, 256, 1024):
        cloud = simulate_epl(SimulationConfig(chain67, n, m, replicate_seed(777, n)))
        mu = mean_for_initial(chain67, table67, n)
        var = variance_for_initial(chain67, table67, n)
        worst_z = max(worst_z, abs(cloud.mean() - mu) / math.sqrt(var / m))
        if n == 256:
            var_dev = abs(cloud.variance() / var - 1.0)
    elapsed = time.perf_counter() - start
    ok = worst_z <= 4.0 and var_dev <= 0.05 and elapsed < 120.0
    assert report(
        3, ok,
        f"worst mean |z| {worst_z:.2f} (limit 4), n=256 variance off by "
        f"{var_dev:.4f} (limit 0.05), {elapsed:.1f}s",
    )


def test_criterion_04_mean_growth_trend(chain67, table67):
    H, _, _ = entropy_rate(chain67)
    dists = []
    for k in range(7, 14):
        n = 2**k
        ratio = H * mean_for_initial(chain67, table67, n) / (n * math.log(n))
        dists.append(abs(ratio - 1.0))
    monotone = all(b <= a + 1e-12 for a, b in zip(dists, dists[1:]))
    ok = dists[-1] <= 0.15 and monotone
    assert report(
        4, ok,
        f"|H nu / (n log n) - 1| falls {dists[0]:.4f} -> {dists[-1]:.4f} "
        f"over n = 2^7..2^13, monotone={monotone}",
    )


def test_criterion_05_error_term_flatness(chain67, table67):
    H, _, _ = entropy_rate(chain67)
    err = error_term_table(chain67, table67, H)
    wide = err.window_max_increment(64, 4096)
    narrow = err.window_max_increment(64, 2048)
    ratio = wide / narrow
    ok = ratio <= 1.25
    assert report(
        5, ok,
        f"max |f(n+1)-f(n)| ratio [64,4096] / [64,2048] = {ratio:.4f} (limit 1.25)",
    )


def test_criterion_06_poisson_identities(three_tables):
    start = time.perf_counter()
    worst = 0.0
    for _, table in three_tables:
        for lam in (10.0, 50.0, 200.0, 1000.0):
            for i in (0, 1):
                worst = max(worst, check_mean_decomposition(table, i, lam),
                            check_variance_decomposition(table, i, lam))
    elapsed = time.perf_counter() - start
    ok = worst <= 1e-6 and elapsed < 30.0
    assert report(
        6, ok,
        f"worst split-identity residual {worst:.2e} over 3 chains x 4 rates, "
        f"{elapsed:.1f}s",
    )


def test_criterion_07_variance_slope(three_tables):
    details = []
    ok = True
    for chain, table in three_tables:
        sig2 = sigma_squared(chain)[1]
        fit = fit_variance_growth(table, [2**k for k in range(8, 14)])
        rel = abs(fit.a - sig2) / sig2
        ok = ok and rel <= 0.15
        details.append(f"({chain.p00:g},{chain.p11:g}): slope {fit.a:.4f} "
                       f"vs {sig2:.4f} (rel {rel:.3f})")
    assert report(7, ok, "; ".join(details))


def test_criterion_08_normal_limit(chain67, table67):
    start = time.perf_counter()
    sig2 = sigma_squared(chain67)[1]
    config = SimulationConfig(chain67, 2048, 2000, 20240817)
    cloud = simulate_epl(config)
    center, scale = standardization_parameters(config, table67, sig2)
    std = standardize(cloud, center, scale)
    ks = ks_distance(std)
    skew = std.skewness()
    kurt = std.excess_kurtosis()
    elapsed = time.perf_counter() - start
    ok = ks <= 0.05 and abs(skew) <= 0.25 and abs(kurt) <= 0.5 and elapsed < 300.0
    report(
        8, ok,
        f"asymptotic-scale cloud at n=2048: ks {ks:.4f} (limit 0.05), "
        f"skew {skew:+.4f}, kurt {kurt:+.4f}, {elapsed:.1f}s",
    )
    assert abs(skew) <= 0.25
    assert abs(kurt) <= 0.5
    assert elapsed < 300.0
    # the KS bound is unreachable at this n with the sqrt(sigma2 n log n)
    # scale (sample variance sits near 2.7, not 1); asserted anyway, red on
    # purpose rather than silently loosened
    assert ks <= 0.05


def test_criterion_09_contraction_iteration(chain67):
    m = 100_000
    cloud0 = cloud1 = uniform_cloud(m, 4242)
    track = [max(ks_distance(cloud0), ks_distance(cloud1))]
    for it in range(1, 11):
        cloud0, cloud1 = apply_T(cloud0, cloud1, chain67, replicate_seed(4242, 9000 + it))
        track.append(max(ks_distance(cloud0), ks_distance(cloud1)))
    final = track[-1]
    noise = 6.0 / math.sqrt(m)
    worst_bump = max((b - a) for a, b in zip(track, track[1:]))
    ok = final < 0.01 and worst_bump <= noise
    report(
        9, ok,
        f"ks trace {' '.join(f'{x:.4f}' for x in track)}; worst increase "
        f"{worst_bump:+.4f} (noise allowance {noise:.4f})",
    )
    assert worst_bump <= noise
    # the final-value bound is out of reach for the pure resampling map: the
    # sqrt-coefficient matrix amplifies bootstrap mean noise by ~1.4x per
    # step, so after the shape has contracted (iterations 4-6 sit near 0.008)
    # the trace drifts back up; over 50 seeds the final KS has median 0.037
    # and lands below 0.01 for ~12% of seeds.  Asserted anyway, red on
    # purpose rather than reseeded until lucky
    assert final < 0.01


def test_criterion_10_initial_law_insensitivity(chain67, table67):
    sig2 = sigma_squared(chain67)[1]
    clouds = []
    for mu in (0.2, 0.5, 0.8):
        chain = MarkovChain(mu, 0.6, 0.7)
        config = SimulationConfig(chain, 2048, 2000, 31415)
        cloud = simulate_epl(config)
        center, scale = standardization_parameters(config, table67, sig2)
        clouds.append(standardize(cloud, center, scale))
    pair_ks = [
        ks_two_sample(clouds[0], clouds[1]),
        ks_two_sample(clouds[0], clouds[2]),
        ks_two_sample(clouds[1], clouds[2]),
    ]
    worst = max(pair_ks)
    ok = worst <= 0.06
    assert report(
        10, ok,
        "pairwise ks over mu0 in {0.2, 0.5, 0.8}: "
        + ", ".join(f"{d:.4f}" for d in pair_ks) + " (limit 0.06)",
    )


def test_criterion_11_condition_separation():
    chain = MarkovChain(0.5, 0.9, 0.2)
    cond = multivariate_condition_holds(chain)
    xi = contraction_factor(chain, 3.0)
    ok = (cond is False) and xi < 1.0
    assert report(
        11, ok,
        f"joint condition {cond} while xi(3) = {xi:.4f} < 1 for (0.9, 0.2)",
    )
