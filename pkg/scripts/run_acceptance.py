"""Run the acceptance suite and print one line per criterion with its wall time."""

from __future__ import annotations

import argparse
import sys
import time
from pathlib import Path

import pytest

ROOT = Path(__file__).resolve().parents[1]


class _Collector:
    def __init__(self) -> None:
        self.rows: list[tuple[str, str, float]] = []

    def pytest_runtest_logreport(self, report) -> None:
        if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
            self.rows.append((report.nodeid.split("::")[-1], report.outcome, report.duration))


def main(argv: list[str] | None = None) -> int:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("-k", help="pytest -k expression to select criteria")
    ns = ap.parse_args(argv)
    args = [str(ROOT / "tests" / "test_acceptance.py"), "-q", "-p", "no:cacheprovider"]
    if ns.k:
        args += ["-k", ns.k]
    col = _Collector()
    t0 = time.perf_counter()
    code = pytest.main(args, plugins=[col])
    print()
    for name, outcome, dur in col.rows:
        print(f"{outcome:7s} {dur:8.2f}s  {name}")
    print(f"total {time.perf_counter() - t0:.1f}s")
    return int(code)


if __name__ == "__main__":
    sys.exit(main())
