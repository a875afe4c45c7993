#!/usr/bin/env python3
"""Run every shipped experiment config and summarize the outcomes.

Reports land in out/ next to the repo root.  The quadratic violator config
is expected to fail its check (that is its point); everything else must
pass.  Exit status is nonzero when any config deviates from expectation.
"""

from __future__ import annotations

import json
import sys
from pathlib import Path

from hyerslab.cli import parse_config, run
from hyerslab.reporting import write_json

ROOT = Path(__file__).resolve().parents[1]
CONFIG_DIR = ROOT / "configs"
OUT_DIR = ROOT / "out"

EXPECTED_PASS = {
    "axioms_crisp.json": True,
    "solution_check_quadratic.json": False,   # deliberate violator
    "nonuniform_sine.json": True,
    "uniform_sine.json": True,
    "corollary53_powergrowth.json": True,
    "full_demo.json": True,
}


def main() -> int:
    OUT_DIR.mkdir(exist_ok=True)
    bad = 0
    for name in sorted(EXPECTED_PASS):
        path = CONFIG_DIR / name
        with open(path, "r", encoding="utf-8") as fh:
            config = parse_config(json.load(fh))
        report = run(config)
        out_path = OUT_DIR / (path.stem + ".report.json")
        write_json(str(out_path), report)
        got = report["overall_pass"]
        want = EXPECTED_PASS[name]
        status = "ok" if got == want else "UNEXPECTED"
        if got != want:
            bad += 1
        print(f"{name:36s} overall_pass={str(got):5s} expected={str(want):5s} "
              f"[{status}] -> {out_path.name}")
    return 1 if bad else 0


if __name__ == "__main__":
    sys.exit(main())
