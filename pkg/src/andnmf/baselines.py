"""Reference NMF solvers for convergence comparisons.

Three standard alternating schemes over ||Y - A X||_F^2 with nonnegativity:
multiplicative updates (ratio rules with a denominator floor), hierarchical
ALS (cyclic exact single-column/row minimization, clipped at zero), and
alternating NNLS approximated by projected gradient with step 1/L per block.
All three are monotone per (half-)step up to the epsilon floor.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import metrics
from .linalg import as_matrix, spectral_norm
from .solver import RunTrace, TraceRow

ALGORITHMS = ("mu", "hals", "anls")


@dataclass
class BaselineConfig:
    algorithm: str = "hals"
    outer_iters: int = 200
    inner_iters: int = 10  # projected-gradient steps per ANLS block
    epsilon_floor: float = 1e-12
    seed: int = 0

    def validate(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"algorithm must be one of {ALGORITHMS}, got {self.algorithm!r}")
        if self.outer_iters < 0:
            raise ValueError(f"outer_iters must be >= 0, got {self.outer_iters}")
        if self.inner_iters < 0:
            raise ValueError(f"inner_iters must be >= 0, got {self.inner_iters}")
        if self.epsilon_floor <= 0:
            raise ValueError(f"epsilon_floor must be > 0, got {self.epsilon_floor}")


@dataclass
class BaselineResult:
    a: np.ndarray
    x: np.ndarray
    trace: RunTrace


def _check_shapes(a, x, y):
    if a.shape[0] != y.shape[0] or x.shape[1] != y.shape[1] or a.shape[1] != x.shape[0]:
        raise ValueError(f"shape mismatch: a {a.shape}, x {x.shape}, y {y.shape}")


def mu_step(a, x, y, eps: float = 1e-12):
    """One multiplicative update of X then A; requires nonnegative inputs."""
    a = as_matrix(a, "a")
    x = as_matrix(x, "x")
    y = as_matrix(y, "y")
    _check_shapes(a, x, y)
    for name, m in (("a", a), ("x", x), ("y", y)):
        if np.any(m < 0):
            raise ValueError(f"multiplicative updates require nonnegative {name}")
    x2 = x * (a.T @ y) / (a.T @ a @ x + eps)
    a2 = a * (y @ x2.T) / (a @ (x2 @ x2.T) + eps)
    return a2, x2


def hals_step(a, x, y, eps: float = 1e-12):
    """One sweep of cyclic column updates of A, then row updates of X.

    Each block solves its single-variable least squares exactly and clips at
    zero; a zero denominator (unused component) leaves the block unchanged.
    """
    a = as_matrix(a, "a").copy()
    x = as_matrix(x, "x").copy()
    y = as_matrix(y, "y")
    _check_shapes(a, x, y)
    d = a.shape[1]
    xxt = x @ x.T
    yxt = y @ x.T
    for j in range(d):
        num = yxt[:, j] - a @ xxt[:, j]
        a[:, j] = np.maximum(0.0, a[:, j] + num / (xxt[j, j] + eps))
    ata = a.T @ a
    aty = a.T @ y
    for j in range(d):
        num = aty[j] - ata[j] @ x
        x[j] = np.maximum(0.0, x[j] + num / (ata[j, j] + eps))
    return a, x


def anls_step(a, x, y, inner_iters: int = 10, eps: float = 1e-12):
    """Approximate alternating NNLS: `inner_iters` projected-gradient steps on
    X with step 1/||A^T A||_2, then the symmetric update of A."""
    a = as_matrix(a, "a").copy()
    x = as_matrix(x, "x").copy()
    y = as_matrix(y, "y")
    _check_shapes(a, x, y)
    if inner_iters == 0:
        return a, x
    ata = a.T @ a
    aty = a.T @ y
    step = 1.0 / (spectral_norm(ata) + eps)
    for _ in range(inner_iters):
        x = np.maximum(0.0, x - step * (ata @ x - aty))
    xxt = x @ x.T
    yxt = y @ x.T
    step = 1.0 / (spectral_norm(xxt) + eps)
    for _ in range(inner_iters):
        a = np.maximum(0.0, a - step * (a @ xxt - yxt))
    return a, x


def run_baseline(cfg: BaselineConfig, y, a0, truth=None, eval_every: int = 1, on_row=None) -> BaselineResult:
    """Drive one baseline from a0, tracing the same schema as the staged solver
    (stage fixed at 0, iteration = outer index, alpha = 0).

    X starts at seeded Unif[0, 1). Multiplicative updates require nonnegative
    data; Y with negative entries is rejected up front, and a0 is clipped at
    zero for MU since its iterations cannot leave the nonnegative orthant.
    """
    cfg.validate()
    y = as_matrix(y, "y")
    a = as_matrix(a0, "a0").copy()
    if a.shape[0] != y.shape[0]:
        raise ValueError(f"a0 has {a.shape[0]} rows but y has {y.shape[0]}")
    if cfg.algorithm == "mu":
        if np.any(y < 0):
            raise ValueError(
                "multiplicative updates require nonnegative data; "
                "this dataset has negative entries"
            )
        a = np.maximum(a, 0.0)
    d = a.shape[1]
    rng = np.random.default_rng(cfg.seed)
    x = rng.random((d, y.shape[1]))
    evaluator = None
    if truth is not None:
        evaluator = metrics.Evaluator(getattr(truth, "a_star", truth))

    trace = RunTrace()
    t0 = time.perf_counter()

    def record(it):
        if evaluator is not None:
            dec = evaluator.decompose(a)
            err = evaluator.error_report(a).total
            e_norm, n_norm = dec.off_diag_norm, dec.residual_norm
        else:
            err = float(np.linalg.norm(y - a @ x))
            e_norm = n_norm = None
        row = TraceRow(
            stage=0,
            iteration=it,
            seconds=time.perf_counter() - t0,
            alpha=0.0,
            total_error=err,
            log10_error=math.log10(err) if err > 0 else -math.inf,
            e_norm=e_norm,
            n_norm=n_norm,
        )
        trace.append(row)
        if on_row is not None:
            on_row(row)

    for it in range(cfg.outer_iters):
        if cfg.algorithm == "mu":
            a, x = mu_step(a, x, y, cfg.epsilon_floor)
        elif cfg.algorithm == "hals":
            a, x = hals_step(a, x, y, cfg.epsilon_floor)
        else:
            a, x = anls_step(a, x, y, cfg.inner_iters, cfg.epsilon_floor)
        if it % eval_every == 0 or it == cfg.outer_iters - 1:
            record(it)
    return BaselineResult(a=a, x=x, trace=trace)
