"""Initialization- and sparsity-robustness sweeps on DIR-style data.

Three sweeps, each writing traces under <out>/:
  in-span   A0 = A*(I + U) with U scaled by r_l in {0.5, 1, 2}
  out-span  A0 = A*(I + U) + N with N scaled by r_n in {0, 5, 10, 20}
            (r_n = 20 puts N at column-norm parity with A*)
  sparsity  Dirichlet total mass alpha_total in {5, 20, 80}
"""

import argparse
from pathlib import Path

from andnmf.config import validate_config
from andnmf.harness import generate, run


def one_run(out, dataset, init, solver, label):
    raw = {"dataset": dataset, "init": init, "solvers": [solver]}
    cfg = validate_config(raw)
    generate(cfg, out)
    summary = run(cfg, out)
    status = summary["solvers"][0]
    print(f"  {label:>16}: final_error={status.get('final_error')}")


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default="runs/robustness")
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--quick", action="store_true",
                        help="few stages and small n, for a fast dry run")
    args = parser.parse_args()
    base = Path(args.out)
    scale = 0.05 if args.quick else 1.0
    n = 800 if args.quick else 4000
    init_stages = max(2, int(65 * scale))
    and_init = {"name": "and", "stages": init_stages, "iters_per_stage": 50}

    print("in-span noise sweep (r_l):")
    for r_l in (0.5, 1.0, 2.0):
        one_run(base / f"in_span_rl_{r_l:g}",
                {"preset": "DIR", "seed": args.seed},
                {"r_l": r_l}, dict(and_init), f"r_l={r_l:g}")

    print("out-of-span noise sweep (r_n):")
    for r_n in (0.0, 5.0, 10.0, 20.0):
        one_run(base / f"out_span_rn_{r_n:g}",
                {"preset": "DIR", "seed": args.seed},
                {"r_l": 1.0, "r_n": r_n}, dict(and_init), f"r_n={r_n:g}")

    print("sparsity sweep (Dirichlet total mass):")
    for alpha_total, stages, ratio in ((5.0, 110, 1 / 1.1), (20.0, 200, 1 / 1.05),
                                       (80.0, 210, 1 / 1.03)):
        dataset = {
            "preset": "DIR", "seed": args.seed, "n": n,
            "weights": {"family": "dirichlet", "concentration": alpha_total / 20},
        }
        solver = {"name": "and", "stages": max(2, int(stages * scale)),
                  "iters_per_stage": 50,
                  "schedule": {"kind": "geometric", "start": 0.1, "ratio": ratio}}
        one_run(base / f"sparsity_{alpha_total:g}", dataset, {"r_l": 1.0},
                solver, f"alpha_total={alpha_total:g}")


if __name__ == "__main__":
    main()
