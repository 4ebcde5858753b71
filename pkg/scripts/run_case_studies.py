#!/usr/bin/env python3
"""Run the three shipped case studies end to end and print their summaries.

Outputs land under $DCLINK_OUT (default ./out), one directory per study.
"""

import sys
from pathlib import Path

from dclink.cli import main

SCENARIOS = Path(__file__).resolve().parent.parent / "scenarios"


def run():
    status = 0
    for name in ("robustness.cfg", "sharing3.cfg", "droop.cfg"):
        print(f"=== {name} ===")
        rc = main(["run", str(SCENARIOS / name)])
        if rc != 0:
            print(f"{name} failed with exit code {rc}", file=sys.stderr)
            status = rc
            continue
        out = Path("out") / Path(name).stem
        summary = out / "summary.txt"
        if summary.exists():
            print(summary.read_text())
    return status


if __name__ == "__main__":
    sys.exit(run())
