"""Acceptance suite: one test per criterion, each printing a PASS/FAIL line.

Run with `pytest tests/test_acceptance.py -v -s`. Solver runs reuse
session-scoped datasets where protocols coincide; every tolerance is asserted
exactly as stated. Criteria that pin no stage count or annealing ratio use
per-run values chosen for robust margins at desk scale (documented inline).
"""

import itertools
import json
import time

import numpy as np
import pytest

from andnmf.baselines import BaselineConfig, anls_step, hals_step, mu_step, run_baseline
from andnmf.cli import main as cli_main
from andnmf.linalg import pseudo_inverse, spectral_norm
from andnmf.matio import read_trace
from andnmf.metrics import Evaluator, total_correlation_error
from andnmf.solver import AndConfig, ThresholdSchedule, run, simulate_update_recurrence
from andnmf.synth import InitSpec, NoiseSpec, generate_dataset, generate_ground_truth, generate_initialization
from andnmf.weights import WeightSpec, gcc_from_samples, sample_weights

W, D, N = 200, 20, 2000
GEOMETRIC = ThresholdSchedule.geometric(0.1, 1.0 / 1.1)
CTM_WEIGHTS = dict(rho=0.5, cov_scale=25.0)


def report(name, ok, detail=""):
    print(f"[acceptance] {name}: {'PASS' if ok else 'FAIL'} {detail}")
    assert ok, f"{name}: {detail}"


def fit_line(ys):
    xs = np.arange(len(ys), dtype=float)
    design = np.vstack([xs, np.ones_like(xs)]).T
    coef, *_ = np.linalg.lstsq(design, ys, rcond=None)
    resid = ys - design @ coef
    ss_res = float(resid @ resid)
    ss_tot = float(np.sum((ys - ys.mean()) ** 2))
    return float(coef[0]), 1.0 - ss_res / ss_tot


@pytest.fixture(scope="session")
def dir_problem():
    gt = generate_ground_truth(W, D, kind="nonneg", seed=101)
    ds = generate_dataset(gt, WeightSpec.dirichlet(D, 0.05 * (100 / D), seed=102),
                          NoiseSpec(0.0), N, seed=103)
    init = generate_initialization(gt, InitSpec(r_l=1.0, seed=104))
    return gt, ds, init


@pytest.fixture(scope="session")
def ctm_problem():
    gt = generate_ground_truth(W, D, kind="nonneg", seed=201)
    ds = generate_dataset(gt, WeightSpec.logistic_normal(D, seed=202, **CTM_WEIGHTS),
                          NoiseSpec(0.0), N, seed=203)
    init = generate_initialization(gt, InitSpec(r_l=1.0, seed=204))
    return gt, ds, init


def test_c1_dir_linear_rate(dir_problem):
    """Full DIR protocol: Dirichlet(0.25), r_l=1, Geometric(0.1, 1/1.1),
    30 stages x T=50; demands a >= 4 decade drop with stage-linear decay.

    Known to fail on the magnitude clause: the stage fixed point of the
    update carries a threshold-truncation bias whose correlation error
    scales like alpha^~1 on Dirichlet weights (measured err ~ 232 * a^0.95
    on this data), so 30 stages of 1.1x annealing can shed only about one
    decade regardless of the step size. The decay is beautifully stage-linear
    (R2 ~ 0.99); it is the demanded magnitude that the weight family cannot
    deliver. A 4-decade drop needs nonzero weights bounded away from the
    threshold band (compare the binary and scaled-logistic-normal runs).
    """
    gt, ds, init = dir_problem
    cfg = AndConfig(stages=30, iters_per_stage=50, schedule=GEOMETRIC)
    t0 = time.perf_counter()
    result = run(init.a0, ds.y, cfg, truth=gt, eval_every=50)
    elapsed = time.perf_counter() - t0
    initial = Evaluator(gt.a_star).total(init.a0)
    log_ends = np.log10(result.trace.stage_end_errors())
    drop = np.log10(initial) - log_ends[-1]
    slope, r2 = fit_line(log_ends)
    ok = drop >= 4.0 and slope < 0 and r2 >= 0.9 and elapsed <= 120
    report(
        "C1 DIR linear-rate recovery", ok,
        f"(log10 drop {drop:.2f} [need >= 4], slope {slope:.4f}, R2 {r2:.3f}, "
        f"{elapsed:.0f}s; the threshold-bias floor tracks alpha^~1 on "
        f"Dirichlet weights, capping the 30-stage drop near one decade)",
    )


def test_c2_ctm_recovery(ctm_problem):
    """Strong-correlation recovery; stage count not pinned by the criterion,
    110 stages lets the schedule anneal to where the logistic-normal decode
    bias is negligible."""
    gt, ds, init = ctm_problem
    cfg = AndConfig(stages=110, iters_per_stage=50, schedule=GEOMETRIC)
    t0 = time.perf_counter()
    result = run(init.a0, ds.y, cfg, truth=gt, eval_every=50)
    elapsed = time.perf_counter() - t0
    initial = Evaluator(gt.a_star).total(init.a0)
    final = result.trace.stage_end_errors()[-1]
    ok = final <= 1e-3 * initial and elapsed <= 120
    report("C2 CTM recovery", ok,
           f"(final/initial {final / initial:.2e} [need <= 1e-3], {elapsed:.0f}s)")


def test_c3_negative_ground_truth():
    gt = generate_ground_truth(W, D, kind="signed", seed=301)
    ds = generate_dataset(gt, WeightSpec.logistic_normal(D, seed=302, **CTM_WEIGHTS),
                          NoiseSpec(0.0), N, seed=303)
    init = generate_initialization(gt, InitSpec(r_l=1.0, seed=304))
    initial = Evaluator(gt.a_star).total(init.a0)
    t0 = time.perf_counter()
    and_result = run(init.a0, ds.y,
                     AndConfig(stages=110, iters_per_stage=50, schedule=GEOMETRIC),
                     truth=gt, eval_every=50)
    hals_result = run_baseline(BaselineConfig("hals", outer_iters=1000, seed=305),
                               ds.y, init.a0, truth=gt, eval_every=100)
    elapsed = time.perf_counter() - t0
    and_final = and_result.trace.stage_end_errors()[-1]
    hals_final = hals_result.trace.rows[-1].total_error
    ok = and_final <= 1e-3 * initial and hals_final >= 1e-1 * initial and elapsed <= 180
    report(
        "C3 NEG recovery vs HALS", ok,
        f"(AND {and_final / initial:.2e} [<= 1e-3], "
        f"HALS {hals_final / initial:.2e} [>= 1e-1], {elapsed:.0f}s)",
    )


def test_c4_threshold_ablation(dir_problem):
    """Identical DIR runs, constant vs decreasing threshold; 70 stages each
    (count not pinned) so the decreasing arm separates by the required factor."""
    gt, ds, init = dir_problem
    stages = 70
    geo = run(init.a0, ds.y,
              AndConfig(stages=stages, iters_per_stage=50, schedule=GEOMETRIC),
              truth=gt, eval_every=50)
    const = run(init.a0, ds.y,
                AndConfig(stages=stages, iters_per_stage=50,
                          schedule=ThresholdSchedule.constant(0.1)),
                truth=gt, eval_every=50)
    geo_final = geo.trace.stage_end_errors()[-1]
    const_final = const.trace.stage_end_errors()[-1]
    const_ends = const.trace.stage_end_errors()
    plateaued = const_ends[29] >= 0.5 * const_ends[4]
    ok = const_final >= 100 * geo_final and plateaued
    report(
        "C4 threshold ablation", ok,
        f"(constant/decreasing {const_final / geo_final:.0f}x [need >= 100], "
        f"constant stage30/stage5 {const_ends[29] / const_ends[4]:.2f} [need >= 0.5])",
    )


def test_c5_binary_recovery():
    gt = generate_ground_truth(W, D, kind="nonneg", seed=501)
    ds = generate_dataset(gt, WeightSpec.sparse_binary(D, 3, seed=502),
                          NoiseSpec(0.0), N, seed=503)
    init = generate_initialization(gt, InitSpec(r_l=1.0, seed=504))
    cfg = AndConfig(stages=16, iters_per_stage=50,
                    schedule=ThresholdSchedule.constant(0.25))
    result = run(init.a0, ds.y, cfg, truth=gt, eval_every=50)
    dec = Evaluator(gt.a_star).decompose(result.a)
    rel = spectral_norm(result.a - gt.a_star @ np.diag(dec.sigma)) / spectral_norm(gt.a_star)
    ok = rel <= 1e-6 and dec.sigma_min >= 0.5
    report("C5 binary-case recovery", ok,
           f"(||A - A* Sigma|| / ||A*|| = {rel:.2e} [<= 1e-6], "
           f"min diag {dec.sigma_min:.3f} [>= 1/2])")


def test_c6_noise_plateau():
    """Common random numbers across gamma levels: same weights and unit noise,
    scaled per level, so plateau monotonicity is not washed out by draws."""
    gt = generate_ground_truth(W, D, kind="nonneg", seed=601)
    x = sample_weights(WeightSpec.logistic_normal(D, seed=602, **CTM_WEIGHTS), N)
    unit = np.random.default_rng(603).standard_normal((W, N)) / np.sqrt(W)
    init = generate_initialization(gt, InitSpec(r_l=1.0, seed=604))
    plateaus, changes = {}, {}
    for gamma in (0.01, 0.02, 0.04):
        y = gt.a_star @ x + gamma * unit
        result = run(init.a0, y,
                     AndConfig(stages=110, iters_per_stage=100, schedule=GEOMETRIC),
                     truth=gt, eval_every=100)
        ends = result.trace.stage_end_errors()
        last5 = ends[-5:]
        plateaus[gamma] = float(last5.mean())
        changes[gamma] = float((last5.max() - last5.min()) / last5.min())
    ratio = plateaus[0.04] / plateaus[0.01]
    flat = all(c <= 0.10 for c in changes.values())
    monotone = plateaus[0.01] < plateaus[0.02] < plateaus[0.04]
    ok = flat and monotone and 2.0 <= ratio <= 8.0
    report(
        "C6 noise plateau", ok,
        f"(plateaus {plateaus[0.01]:.3g}/{plateaus[0.02]:.3g}/{plateaus[0.04]:.3g}, "
        f"last-5 change {max(changes.values()):.1%} [<= 10%], "
        f"ratio {ratio:.2f} [in [2, 8]])",
    )


class TestC7Robustness:
    def test_in_span_level_two(self, dir_problem):
        gt, ds, _ = dir_problem
        init2 = generate_initialization(gt, InitSpec(r_l=2.0, seed=701))
        initial = Evaluator(gt.a_star).total(init2.a0)
        result = run(init2.a0, ds.y,
                     AndConfig(stages=65, iters_per_stage=50, schedule=GEOMETRIC),
                     truth=gt, eval_every=50)
        final = result.trace.stage_end_errors()[-1]
        report("C7a in-span r_l=2 converges", final <= 1e-2 * initial,
               f"(final/initial {final / initial:.2e} [need <= 1e-2])")

    def test_out_of_span_column_norm_parity(self, dir_problem):
        gt, ds, init = dir_problem
        # r_n = 20 puts the out-of-span component at column-norm parity with
        # the signal: ||N col|| ~ 0.05 * r_n * sqrt(W/3) ~ ||A* col||
        init_n = generate_initialization(gt, InitSpec(r_l=1.0, r_n=20.0, seed=702))
        n_cols = np.linalg.norm(init_n.n_mat, axis=0).mean()
        star_cols = np.linalg.norm(gt.a_star, axis=0).mean()
        assert 0.7 <= n_cols / star_cols <= 1.3  # parity, not just "large"
        cfg = AndConfig(stages=65, iters_per_stage=50, schedule=GEOMETRIC)
        noisy = run(init_n.a0, ds.y, cfg, truth=gt, eval_every=50)
        clean = run(init.a0, ds.y, cfg, truth=gt, eval_every=50)
        f_noisy = noisy.trace.stage_end_errors()[-1]
        f_clean = clean.trace.stage_end_errors()[-1]
        report(
            "C7b out-of-span parity degrades <= 10x", f_noisy <= 10 * f_clean,
            f"(degradation {f_noisy / f_clean:.2f}x [need <= 10], "
            f"||N col||/||A* col|| {n_cols / star_cols:.2f})",
        )

    @pytest.mark.parametrize(
        "alpha_total, stages, ratio, seed",
        [(5.0, 110, 1.0 / 1.1, 710), (20.0, 200, 1.0 / 1.05, 720)],
    )
    def test_sparsity_converges(self, alpha_total, stages, ratio, seed):
        """`converges`: error falls by at least a decade and lands at a
        normalized total error (relative to the total ground-truth column
        mass) of at most 0.01. n and the annealing rate are not pinned;
        n=4000 keeps the finite-sample floor below the target."""
        gt = generate_ground_truth(W, D, kind="nonneg", seed=seed)
        ds = generate_dataset(gt, WeightSpec.dirichlet(D, alpha_total / D, seed=seed + 1),
                              NoiseSpec(0.0), 4000, seed=seed + 2)
        init = generate_initialization(gt, InitSpec(r_l=1.0, seed=seed + 3))
        evaluator = Evaluator(gt.a_star)
        initial = evaluator.total(init.a0)
        sched = ThresholdSchedule.geometric(0.1, ratio)
        result = run(init.a0, ds.y,
                     AndConfig(stages=stages, iters_per_stage=50, schedule=sched),
                     truth=gt, eval_every=50)
        final = result.trace.stage_end_errors()[-1]
        normalized = final / evaluator.column_norm_total
        ok = final <= 0.1 * initial and normalized <= 0.01
        report(
            f"C7c sparsity alpha_total={alpha_total:g} converges", ok,
            f"(drop {np.log10(initial / final):.2f} decades, "
            f"normalized {normalized:.2e} [need <= 0.01])",
        )

    def test_sparsity_dense_plateaus(self):
        gt = generate_ground_truth(W, D, kind="nonneg", seed=730)
        ds = generate_dataset(gt, WeightSpec.dirichlet(D, 80.0 / D, seed=731),
                              NoiseSpec(0.0), 4000, seed=732)
        init = generate_initialization(gt, InitSpec(r_l=1.0, seed=733))
        evaluator = Evaluator(gt.a_star)
        sched = ThresholdSchedule.geometric(0.1, 1.0 / 1.03)
        result = run(init.a0, ds.y,
                     AndConfig(stages=210, iters_per_stage=50, schedule=sched),
                     truth=gt, eval_every=50)
        ends = result.trace.stage_end_errors()
        last5 = ends[-5:]
        change = (last5.max() - last5.min()) / last5.min()
        normalized = last5.mean() / evaluator.column_norm_total
        ok = change <= 0.10 and normalized <= 0.1
        report(
            "C7d sparsity alpha_total=80 plateaus", ok,
            f"(last-5 change {change:.1%}, normalized error {normalized:.3f} [<= 0.1])",
        )


class TestC8InvariantSuites:
    def test_penrose(self):
        for seed in range(5):
            m = np.random.default_rng(seed).standard_normal((20, 10))
            p = pseudo_inverse(m)
            assert np.linalg.norm(m @ p @ m - m) <= 1e-9 * np.linalg.norm(m)
            assert np.linalg.norm(p @ m @ p - p) <= 1e-9 * np.linalg.norm(p)
            assert np.linalg.norm(m @ p - (m @ p).T) <= 1e-9
            assert np.linalg.norm(p @ m - (p @ m).T) <= 1e-9
        report("C8 Penrose identities", True, "(5 random 20x10 instances, 1e-9)")

    def test_metric_invariance_exact(self):
        rng = np.random.default_rng(81)
        a = rng.standard_normal((20, 6))
        star = rng.standard_normal((20, 6))
        base = total_correlation_error(a, star).total
        perm = rng.permutation(6)
        pow2 = np.array([0.5, 2.0, 8.0, 0.25, 1.0, 4.0])
        exact = total_correlation_error(a[:, perm] * pow2, star).total == base
        general = abs(
            total_correlation_error(a[:, perm] * rng.uniform(0.2, 3.0, 6), star).total - base
        ) <= 1e-12 * max(base, 1.0)
        report("C8 metric permutation/scale invariance", exact and general,
               "(power-of-two scalings bitwise, general within 1e-12)")

    def test_decompose_round_trip(self):
        rng = np.random.default_rng(82)
        star = rng.random((30, 8))
        a = rng.standard_normal((30, 8))
        dec = Evaluator(star).decompose(a)
        rebuilt = star @ (np.diag(dec.sigma) + dec.off_diag) + dec.residual
        ok = np.linalg.norm(rebuilt - a) <= 1e-9 * np.linalg.norm(a)
        report("C8 decompose round trip", ok, "(1e-9 relative)")

    def test_baseline_monotonicity(self):
        worst = 0.0
        for seed in range(100):
            rng = np.random.default_rng(seed)
            a = rng.random((15, 4)) + 0.05
            x = rng.random((4, 25)) + 0.05
            y = rng.random((15, 25)) + 0.05
            before = np.linalg.norm(y - a @ x)
            for stepper in (
                lambda: mu_step(a, x, y),
                lambda: hals_step(a, x, y),
                lambda: anls_step(a, x, y, inner_iters=5),
            ):
                a2, x2 = stepper()
                worst = max(worst, np.linalg.norm(y - a2 @ x2) - before)
        report("C8 MU/HALS/ANLS monotone", worst <= 1e-9,
               f"(worst increase {worst:.2e} over 100 seeded instances)")

    def test_update_recurrence_bound(self):
        d = 10
        for seed in range(50):
            rng = np.random.default_rng(seed)
            g = rng.standard_normal((d, d))
            lam = g @ g.T / d
            lam /= 2 * spectral_norm(lam)
            sigma0 = np.diag(rng.uniform(0.7, 1.3, d))
            e0 = rng.uniform(-0.2, 0.2, (d, d))
            np.fill_diagonal(e0, 0.0)
            simulate_update_recurrence(
                sigma0, e0, lam, rng.standard_normal((d, d)),
                r_bound=abs(rng.normal(0, 0.05)), eta=0.8, steps=40, seed=seed,
            )  # raises if the bound ever fails
        report("C8 update-recurrence bound", True, "(50 instances, D=10)")

    def test_gcc_enumeration_exact(self):
        supports = list(itertools.combinations(range(4), 2))
        x = np.zeros((4, len(supports)))
        for col, sup in enumerate(supports):
            x[list(sup), col] = 1.0
        est = gcc_from_samples(x)
        exact = (
            est.params.r == 2.0
            and est.params.k == 1.0
            and est.params.m == 8.0 / 3.0
            and abs(est.params.lam - 4.0 / 3.0) <= 1e-12
        )
        report("C8 GCC enumeration (s=2, D=4)", exact,
               "(r, k, m bitwise; lambda within eigensolver 1e-12)")

    def test_gcc_empirical_three_standard_errors(self):
        d, s, n = 4, 2, 50000
        x = sample_weights(WeightSpec.sparse_binary(d, s, seed=83), n)
        est = gcc_from_samples(x)
        delta = np.zeros((d, d))
        for sup in itertools.combinations(range(d), s):
            v = np.zeros(d)
            v[list(sup)] = 1.0
            delta += np.outer(v, v)
        delta /= 6.0
        se = np.sqrt(delta * (1 - delta) / n)
        ok = bool(np.all(np.abs(est.second_moment - delta) <= 3 * se + 1e-12))
        report("C8 empirical GCC within 3 SE at n=50k", ok, "")


def test_c9_cli_run_determinism(tmp_path):
    raw = {
        "dataset": {"preset": "DIR", "seed": 9},
        "init": {"r_l": 1.0},
        "solvers": [
            {"name": "and", "stages": 3, "iters_per_stage": 10},
            {"name": "hals", "outer_iters": 10},
        ],
    }
    cfg_path = tmp_path / "config.json"
    cfg_path.write_text(json.dumps(raw))
    out = tmp_path / "out"
    assert cli_main(["generate", "--config", str(cfg_path), "--out", str(out)]) == 0

    def snapshot():
        assert cli_main(["run", "--config", str(cfg_path), "--out", str(out)]) == 0
        snap = {}
        for label in ("and", "hals"):
            rows = read_trace(out / f"{label}_trace.csv")
            snap[label] = [
                (r.stage, r.iteration, r.alpha, r.total_error, r.log10_error,
                 r.e_norm, r.n_norm)
                for r in rows  # everything except the seconds column
            ]
        return snap

    first, second = snapshot(), snapshot()
    report("C9 cli run determinism", first == second,
           "(two runs identical modulo the seconds column)")
