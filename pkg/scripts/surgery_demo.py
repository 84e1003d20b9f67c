"""Print deterministic and measured surgery maps for a group.

For each operation the deterministic logical map is compared with the
expected Hopf-algebra map; each measured variant is then run on a random
superposition for a few seeds, printing the outcomes and the residual
against the predicted branch map.
"""

from __future__ import annotations

import argparse

import numpy as np

from kitaev_boundary.cli import SURGERY_OPS, _deterministic, _measured, resolve_group
from kitaev_boundary.surgery import (
    build_patch,
    expected_map,
    expected_measured_merge,
    expected_measured_rough_merge,
    logical_map,
    logical_readout,
    logical_state,
    proportional,
)


def _predicted(G, op, extra):
    if op == "smooth-merge":
        return expected_measured_merge(G, [G.index(x) for x in extra["inner_class"]])
    if op == "rough-merge":
        return expected_measured_rough_merge(G, extra["weight"])
    return expected_map(G, op)


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--group", default="s3")
    ap.add_argument("--seeds", type=int, default=3)
    ns = ap.parse_args()
    G = resolve_group(ns.group)
    for op, ((m, n), k) in SURGERY_OPS.items():
        parts = [build_patch(G, m, n)] * k
        lam, res = proportional(logical_map(_deterministic(op), parts), expected_map(G, op))
        print(f"{op:13s} deterministic  scale={lam.real:.4f}  residual={res:.1e}")
        if op == "antipode":
            continue
        for seed in range(ns.seeds):
            rng = np.random.default_rng(seed)
            c = rng.normal(size=(G.order,) * k) + 1j * rng.normal(size=(G.order,) * k)
            out, rec, extra = _measured(op, logical_state(parts, c).normalized(), seed, None)
            _, res = proportional(logical_readout(out).coeffs.ravel(), _predicted(G, op, extra) @ c.ravel())
            print(f"{'':13s} measured seed={seed}  outcomes={rec.outcomes()}  residual={res:.1e}")


if __name__ == "__main__":
    main()
