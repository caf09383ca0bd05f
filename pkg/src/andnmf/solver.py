"""Staged alternating solver: pseudo-inverse decode, threshold, gradient update.

One run is `stages` blocks of `iters_per_stage` gradient iterations. Within a
stage the decoding matrix is the pseudo-inverse of the stage-start working
matrix (computed once per stage) and the threshold is fixed by the schedule:

    decode   Z = phi_alpha(Pinv @ Y)
    update   A <- A + eta * (Y - A @ Z) @ Z.T

Batch semantics: the gradient accumulates over all columns of the batch before
A changes. The default is the whole dataset per iteration; `batch=b` uses a
cyclic window of b columns per iteration (b = n reproduces full batch bitwise;
b = 1 is the one-sample-per-step variant).

`simulate_update_recurrence` is a numeric harness for the contraction that
drives the analysis of this update: iterating M <- M (I - eta L) + eta Q L
+ eta R with a PSD L and bounded disturbances R keeps
||M_t - Q|| <= ||M_0 - Q|| (1 - eta lmin)^t + ||R||_bound / lmin.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .linalg import as_matrix, spectral_norm, svd_factors, threshold_elementwise

DIVERGENCE_LIMIT = 1e12
_THEORY_ALPHA_FLOOR = 1e-12


class DivergenceError(RuntimeError):
    """A working-matrix entry exceeded the divergence limit."""

    def __init__(self, stage, iteration, trace):
        super().__init__(
            f"solver diverged at stage {stage}, iteration {iteration} "
            f"(|entry| > {DIVERGENCE_LIMIT:g})"
        )
        self.stage = stage
        self.iteration = iteration
        self.trace = trace


class RecurrenceBoundError(AssertionError):
    """The contraction bound failed at some step of the simulated recurrence."""


@dataclass(frozen=True)
class ThresholdSchedule:
    """Stage threshold policy.

    constant:  alpha_j = c
    geometric: alpha_j = start * ratio^j
    theory:    alpha_j = (lam * ||E||_2 / r)^(2 / (q + 1)), clamped to
               (0, 1/4]; requires an estimate of the current mixing norm.
    """

    kind: str
    c: float = 0.0
    start: float = 0.1
    ratio: float = 1.0 / 1.1
    lam: float = 1.0
    r: float = 1.0
    q: float = 1.0

    @classmethod
    def constant(cls, c):
        return cls(kind="constant", c=c)

    @classmethod
    def geometric(cls, start=0.1, ratio=1.0 / 1.1):
        return cls(kind="geometric", start=start, ratio=ratio)

    @classmethod
    def theory(cls, lam, r, q):
        return cls(kind="theory", lam=lam, r=r, q=q)

    def validate(self):
        if self.kind == "constant":
            if self.c < 0:
                raise ValueError(f"constant threshold must be >= 0, got {self.c}")
        elif self.kind == "geometric":
            if self.start <= 0:
                raise ValueError(f"geometric start must be > 0, got {self.start}")
            if not 0 < self.ratio <= 1:
                raise ValueError(f"geometric ratio must be in (0, 1], got {self.ratio}")
        elif self.kind == "theory":
            if self.lam <= 0 or self.r < 1 or self.q < 1:
                raise ValueError(
                    f"theory schedule needs lam > 0, r >= 1, q >= 1; "
                    f"got lam={self.lam}, r={self.r}, q={self.q}"
                )
        else:
            raise ValueError(f"unknown schedule kind {self.kind!r}")


def stage_threshold(schedule: ThresholdSchedule, j: int, e_norm_estimate=None) -> float:
    if j < 0:
        raise ValueError(f"stage index must be >= 0, got {j}")
    schedule.validate()
    if schedule.kind == "constant":
        return schedule.c
    if schedule.kind == "geometric":
        return schedule.start * schedule.ratio**j
    if e_norm_estimate is None:
        raise ValueError("theory schedule requires an e_norm_estimate")
    raw = (schedule.lam * e_norm_estimate / schedule.r) ** (2.0 / (schedule.q + 1.0))
    return float(min(max(raw, _THEORY_ALPHA_FLOOR), 0.25))


@dataclass
class AndConfig:
    """Solver hyperparameters.

    `eta=None` uses a curvature-scaled step recomputed at each stage start:
    eta_scale / (||Z0 Z0^T||_2 + 1e-12) with Z0 the stage's first decode.
    `batch` is "full" or a positive window size.
    """

    stages: int = 30
    iters_per_stage: int = 50
    eta: float | None = None
    eta_scale: float = 0.5
    schedule: ThresholdSchedule = field(default_factory=ThresholdSchedule.geometric)
    batch: object = "full"
    pinv_rel_tol: float = 1e-12
    seed: int = 0

    def validate(self):
        if self.stages < 1 or self.iters_per_stage < 1:
            raise ValueError("stages and iters_per_stage must be >= 1")
        if self.eta is not None and self.eta <= 0:
            raise ValueError(f"eta must be > 0, got {self.eta}")
        if self.eta_scale <= 0:
            raise ValueError(f"eta_scale must be > 0, got {self.eta_scale}")
        if self.batch != "full" and (not isinstance(self.batch, int) or self.batch < 1):
            raise ValueError(f"batch must be 'full' or a positive int, got {self.batch!r}")
        if not 0 < self.pinv_rel_tol < 1:
            raise ValueError(f"pinv_rel_tol must be in (0, 1), got {self.pinv_rel_tol}")
        self.schedule.validate()


@dataclass
class TraceRow:
    stage: int
    iteration: int
    seconds: float
    alpha: float
    total_error: float
    log10_error: float
    e_norm: float | None
    n_norm: float | None


@dataclass
class RunTrace:
    rows: list[TraceRow] = field(default_factory=list)
    pinv_count: int = 0

    def append(self, row: TraceRow):
        self.rows.append(row)

    def stage_end_errors(self) -> np.ndarray:
        """Last recorded error of each stage, in stage order."""
        ends = {}
        for row in self.rows:
            ends[row.stage] = row.total_error
        return np.array([ends[s] for s in sorted(ends)])

    def stage_end_e_norms(self) -> np.ndarray:
        ends = {}
        for row in self.rows:
            if row.e_norm is not None:
                ends[row.stage] = row.e_norm
        return np.array([ends[s] for s in sorted(ends)])


@dataclass
class AndResult:
    a: np.ndarray
    trace: RunTrace


def decode(pinv, y, alpha: float) -> np.ndarray:
    """Z = phi_alpha(pinv @ y), columnwise; output entries are >= alpha or 0."""
    pinv = as_matrix(pinv, "pinv")
    y = as_matrix(y, "y")
    if pinv.shape[1] != y.shape[0]:
        raise ValueError(f"shape mismatch: pinv is {pinv.shape}, y is {y.shape}")
    return threshold_elementwise(pinv @ y, alpha)


def gradient_update(a, y, z, eta: float) -> np.ndarray:
    """A + eta * (Y - A Z) Z^T, accumulated over all columns of the batch."""
    a = as_matrix(a, "a")
    y = as_matrix(y, "y")
    z = as_matrix(z, "z")
    if y.shape[1] != z.shape[1] or a.shape[1] != z.shape[0] or a.shape[0] != y.shape[0]:
        raise ValueError(
            f"shape mismatch: a {a.shape}, y {y.shape}, z {z.shape}"
        )
    return a + eta * ((y - a @ z) @ z.T)


def _stage_pinv(a, rel_tol):
    f = svd_factors(a)
    if f.s[-1] <= rel_tol * f.s[0] * max(a.shape):
        raise ValueError(
            "working matrix lost full column rank "
            f"(sigma_min={f.s[-1]:.3e}, sigma_max={f.s[0]:.3e})"
        )
    inv = 1.0 / f.s
    return (f.vt.T * inv) @ f.u.T


def run(a0, y, cfg: AndConfig, truth=None, eval_every: int = 1, on_row=None) -> AndResult:
    """Run the staged solver on Y from the initialization a0.

    With a ground truth the trace records the total correlation error (and the
    in-span/out-of-span norms from the decomposition); without one it records
    the data residual ||Y - A Z||_F of the state entering each iteration.
    Rows are recorded every `eval_every` iterations plus the last iteration of
    each stage, and stream to `on_row` as produced.

    The theory-driven schedule needs the current mixing norm, which is only
    observable against a ground truth; without one it falls back to the
    default geometric schedule.
    """
    cfg.validate()
    a = as_matrix(a0, "a0").copy()
    y = as_matrix(y, "y")
    if eval_every < 1:
        raise ValueError(f"eval_every must be >= 1, got {eval_every}")
    w, n = y.shape
    if a.shape[0] != w:
        raise ValueError(f"a0 has {a.shape[0]} rows but y has {w}")
    evaluator = None
    if truth is not None:
        a_star = getattr(truth, "a_star", truth)
        evaluator = metrics.Evaluator(a_star, cfg.pinv_rel_tol)

    schedule = cfg.schedule
    if schedule.kind == "theory" and evaluator is None:
        schedule = ThresholdSchedule.geometric()

    batch = n if cfg.batch == "full" else min(cfg.batch, n)
    trace = RunTrace()
    t0 = time.perf_counter()

    def record(stage, it, alpha, resid):
        if evaluator is not None:
            dec = evaluator.decompose(a)
            err = evaluator.error_report(a).total
            e_norm, n_norm = dec.off_diag_norm, dec.residual_norm
        else:
            err = float(np.linalg.norm(resid))
            e_norm = n_norm = None
        row = TraceRow(
            stage=stage,
            iteration=it,
            seconds=time.perf_counter() - t0,
            alpha=alpha,
            total_error=err,
            log10_error=math.log10(err) if err > 0 else -math.inf,
            e_norm=e_norm,
            n_norm=n_norm,
        )
        trace.append(row)
        if on_row is not None:
            on_row(row)

    for j in range(cfg.stages):
        pinv = _stage_pinv(a, cfg.pinv_rel_tol)
        trace.pinv_count += 1
        if schedule.kind == "theory":
            e_est = evaluator.decompose(a).off_diag_norm
            alpha = stage_threshold(schedule, j, e_est)
        else:
            alpha = stage_threshold(schedule, j)
        eta = cfg.eta
        for t in range(cfg.iters_per_stage):
            if batch == n:
                y_batch = y
            else:
                cols = (t * batch + np.arange(batch)) % n
                y_batch = y[:, cols]
            z = decode(pinv, y_batch, alpha)
            if eta is None:
                # curvature-scaled step, fixed for the rest of the stage
                eta = cfg.eta_scale / (spectral_norm(z @ z.T) + 1e-12)
            resid = y_batch - a @ z
            a = a + eta * (resid @ z.T)
            if np.max(np.abs(a)) > DIVERGENCE_LIMIT:
                record(j, t, alpha, resid)
                raise DivergenceError(j, t, trace)
            if t % eval_every == 0 or t == cfg.iters_per_stage - 1:
                record(j, t, alpha, resid)
    return AndResult(a=a, trace=trace)


@dataclass
class RecurrenceResult:
    deviations: np.ndarray  # ||M_t - Q||_2 for t = 0..steps
    bounds: np.ndarray      # the contraction bound at each t
    m_final: np.ndarray


def simulate_update_recurrence(
    sigma0, e0, lam, target, r_bound: float, eta: float, steps: int, seed: int = 0
) -> RecurrenceResult:
    """Iterate M <- M (I - eta L) + eta Q L + eta R_t and check the bound
    ||M_t - Q|| <= ||M_0 - Q|| (1 - eta lmin(L))^t + r_bound / lmin(L)
    at every step. Disturbances R_t are drawn from `seed` with spectral norm
    exactly r_bound. Raises RecurrenceBoundError if the bound ever fails.
    """
    sigma0 = as_matrix(sigma0, "sigma0")
    e0 = as_matrix(e0, "e0")
    lam = as_matrix(lam, "lam")
    target = as_matrix(target, "target")
    d = sigma0.shape[0]
    for name, m in (("sigma0", sigma0), ("e0", e0), ("lam", lam), ("target", target)):
        if m.shape != (d, d):
            raise ValueError(f"{name} must be {d}x{d}, got {m.shape}")
    if np.any(sigma0 - np.diag(np.diag(sigma0)) != 0):
        raise ValueError("sigma0 must be diagonal")
    if np.any(np.diag(e0) != 0):
        raise ValueError("e0 must have a zero diagonal")
    if not np.allclose(lam, lam.T, atol=1e-10):
        raise ValueError("lam must be symmetric")
    eigs = np.linalg.eigvalsh((lam + lam.T) / 2.0)
    if eigs[0] < -1e-10:
        raise ValueError(f"lam must be PSD, got min eigenvalue {eigs[0]:.3e}")
    lmin, lmax = max(eigs[0], 0.0), eigs[-1]
    if eta <= 0 or eta * lmax >= 1:
        raise ValueError(f"need 0 < eta * lmax(lam) < 1, got eta*lmax={eta * lmax:.3g}")
    if r_bound < 0:
        raise ValueError(f"r_bound must be >= 0, got {r_bound}")
    if steps < 0:
        raise ValueError(f"steps must be >= 0, got {steps}")

    rng = np.random.default_rng(seed)
    m = sigma0 + e0
    dev0 = spectral_norm(m - target)
    tail = r_bound / lmin if lmin > 0 else (math.inf if r_bound > 0 else 0.0)
    contraction = 1.0 - eta * lmin
    identity = np.eye(d)
    deviations = [dev0]
    bounds = [dev0 + tail]
    for t in range(1, steps + 1):
        if r_bound > 0:
            raw = rng.uniform(-1.0, 1.0, size=(d, d))
            r = raw * (r_bound / spectral_norm(raw))
        else:
            r = np.zeros((d, d))
        m = m @ (identity - eta * lam) + eta * target @ lam + eta * r
        dev = spectral_norm(m - target)
        bound = dev0 * contraction**t + tail
        deviations.append(dev)
        bounds.append(bound)
        if dev > bound * (1.0 + 1e-9) + 1e-12:
            raise RecurrenceBoundError(
                f"bound violated at step {t}: deviation {dev:.6e} > bound {bound:.6e}"
            )
    return RecurrenceResult(
        deviations=np.array(deviations), bounds=np.array(bounds), m_final=m
    )
