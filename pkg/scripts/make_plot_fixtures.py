#!/usr/bin/env python3
"""Produce small CLI output files used as fixtures by the plotting frontend.

Runs a miniature three-qubit optimization, a coarse landscape scan, a
Gaussian baseline pulse and a small noise-error distribution, then copies
the CSVs into frontend/fixtures/.  Deterministic: reruns reproduce the
same bytes.
"""

import shutil
import sys
import tempfile
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parent))
from _config_text import noisy_qubit_config, three_qubit_config  # noqa: E402

from bgrape.cli import main as bgrape_main  # noqa: E402

FIXTURES = Path(__file__).resolve().parent.parent / "frontend" / "fixtures"


def check(code: int, what: str) -> None:
    if code != 0:
        raise SystemExit(f"{what} failed with exit code {code}")


def main():
    FIXTURES.mkdir(parents=True, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        tmp = Path(tmp)
        cfg3 = tmp / "three_qubit.toml"
        cfg3.write_text(
            three_qubit_config(
                mode="fresh", batch_size=5, seed=404, budget=300,
                learning_rate=0.01, test_every=10, segments=20, duration=4.0,
            )
        )
        opt_dir = tmp / "opt"
        check(bgrape_main(["optimize", "--config", str(cfg3), "--out", str(opt_dir)]), "optimize")
        check(
            bgrape_main([
                "landscape", "--config", str(cfg3), "--field", str(opt_dir / "field_final.csv"),
                "--grid", "9", "--out", str(opt_dir),
            ]),
            "landscape",
        )

        cfgn = tmp / "noisy.toml"
        cfgn.write_text(
            noisy_qubit_config(
                mode="fresh", batch_size=5, seed=404, budget=100,
                learning_rate=0.02, test_every=5,
            )
        )
        base_dir = tmp / "base"
        check(bgrape_main(["baseline", "gaussian", "--config", str(cfgn), "--out", str(base_dir)]), "baseline")
        dist_dir = tmp / "dist"
        check(
            bgrape_main([
                "distribution", "--config", str(cfgn), "--baseline", "rectangular",
                "--samples", "200", "--out", str(dist_dir),
            ]),
            "distribution",
        )

        copies = {
            opt_dir / "trace.csv": "trace.csv",
            opt_dir / "landscape.csv": "landscape.csv",
            base_dir / "field_baseline_gaussian.csv": "field.csv",
            dist_dir / "errors.csv": "errors.csv",
        }
        for src, name in copies.items():
            shutil.copyfile(src, FIXTURES / name)
            print(f"wrote frontend/fixtures/{name}")


if __name__ == "__main__":
    main()
