#!/usr/bin/env python3
"""Single-qubit flip under multiplicative amplitude noise.

Optimizes a bounded control with fresh mini-batches, then compares its
Monte-Carlo gate-error distribution against the rectangular and Gaussian
flip-pulse baselines (10000 noise samples each).
"""

import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _config_text import noisy_qubit_config  # noqa: E402

from bgrape.cli import main as bgrape_main  # noqa: E402


def parse_args():
    p = argparse.ArgumentParser(description=__doc__)
    p.add_argument("--out", default="runs/example2", help="output root")
    p.add_argument("--budget", type=int, default=100_000, help="samples for the optimization")
    p.add_argument("--batch-size", type=int, default=10)
    p.add_argument("--seed", type=int, default=11)
    p.add_argument("--samples", type=int, default=10_000, help="Monte-Carlo evaluation samples")
    return p.parse_args()


def summarize(path: Path) -> dict:
    return json.loads(path.read_text())["summary"]


def main():
    args = parse_args()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    cfg_path = out / "config.toml"
    cfg_path.write_text(
        noisy_qubit_config(
            mode="fresh",
            batch_size=args.batch_size,
            seed=args.seed,
            budget=args.budget,
            learning_rate=0.02,
            test_every=max(1, args.budget // args.batch_size // 50),
        )
    )

    opt_dir = out / "optimized"
    if bgrape_main(["optimize", "--config", str(cfg_path), "--out", str(opt_dir), "--force"]) != 0:
        raise SystemExit("optimization failed")

    results = {}
    for label, extra in {
        "optimized": ["--field", str(opt_dir / "field_best.csv")],
        "rectangular": ["--baseline", "rectangular"],
        "gaussian": ["--baseline", "gaussian"],
    }.items():
        dist_dir = out / f"dist_{label}"
        code = bgrape_main([
            "distribution", "--config", str(cfg_path), *extra,
            "--samples", str(args.samples), "--seed", str(args.seed + 1), "--out", str(dist_dir), "--force",
        ])
        if code != 0:
            raise SystemExit(f"distribution failed for {label}")
        results[label] = summarize(dist_dir / "summary.json")

    print(f"{'pulse':14s} {'P(err<1e-2)':>12s} {'P(err<1e-3)':>12s} {'median':>12s}")
    for label, s in results.items():
        print(f"{label:14s} {s['p_below_0.01']:12.3f} {s['p_below_0.001']:12.3f} {s['median']:12.3e}")
    (out / "summary.json").write_text(json.dumps(results, indent=2) + "\n")


if __name__ == "__main__":
    main()
