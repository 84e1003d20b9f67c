"""Command-line entry point: verification suites, multiplicity tables, lattice demos and surgery runs."""
from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import os
import re
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Sequence

import numpy as np

from . import __version__
from .doubles import INT_TOL, dg_label_name, dg_labels, multiplicity_table
from .group_core import (
    FiniteGroup,
    GroupError,
    Report,
    TransversalData,
    build_transversal,
    cyclic_group,
    generated_subgroup,
    load_group,
    make_subgroup,
    s3,
    symmetric_group,
    transversal_from_positions,
    verify_matched_pair,
)
from .lattice import (
    PRUNE,
    TOL,
    BoundarySpec,
    BudgetError,
    LatticeError,
    build_lattice,
    condense,
    excited_terms,
    hamiltonian_energy,
    ribbon_between,
    ribbon_from_sites,
    trace_ribbon,
    vacuum_state,
    verify_lattice,
)
from .quasihopf import (
    S3_TRANSVERSALS,
    PreconditionError,
    QuasiHopfData,
    catalog,
    cochain_twist,
    verify_antipode,
    verify_octonion,
    verify_quasibialgebra,
    verify_star,
    verify_twist,
    verify_twisted_antipode,
)
from .surgery import (
    SurgeryError,
    build_patch,
    expected_map,
    logical_antipode,
    logical_map,
    logical_readout,
    logical_state,
    measured_rough_merge,
    measured_rough_split,
    measured_smooth_merge,
    measured_smooth_split,
    rough_merge,
    rough_split,
    smooth_merge,
    smooth_split,
)

EXIT_OK, EXIT_FAIL, EXIT_PRECONDITION, EXIT_BUDGET, EXIT_CONFIG = 0, 1, 2, 3, 4
THREADS_ENV = "KITAEV_BOUNDARY_THREADS"
CATALOG_NAMES = [f"s3/{k}" for k in S3_TRANSVERSALS] + ["sn/cyclic/N", "sn/transpositions/N", "octonion"]
TOLERANCES = {"integer": INT_TOL, "lattice": TOL, "prune": PRUNE}

# patch shapes (m, n) per surgery and the number of input patches
SURGERY_OPS: dict[str, tuple[tuple[int, int], int]] = {
    "rough-split": ((2, 3), 1),
    "smooth-split": ((2, 1), 1),
    "rough-merge": ((2, 1), 2),
    "smooth-merge": ((1, 2), 2),
    "antipode": ((2, 2), 1),
}


class ConfigError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_CONFIG)


@dataclass
class RunConfig:
    verb: str
    target: str | None = None
    group: str | None = None
    subgroup: str | None = None
    transversal: list[str] = field(default_factory=list)
    src: str | None = None
    dst: str | None = None
    via_twist: str | None = None
    size: tuple[int, int] | None = None
    seed: int = 0
    fmt: str = "json"
    out: str | None = None
    op: str | None = None
    inputs: str | None = None
    measured: bool = False
    replay: str | None = None
    script: str | None = None

    def to_dict(self) -> dict:
        d = {
            "verb": self.verb, "target": self.target, "group": self.group, "subgroup": self.subgroup,
            "transversal": self.transversal, "from": self.src, "to": self.dst, "via_twist": self.via_twist,
            "size": list(self.size) if self.size else None, "seed": self.seed, "op": self.op,
            "input": self.inputs, "measured": self.measured, "replay": self.replay, "script": self.script,
        }
        return {k: v for k, v in d.items() if v not in (None, [], False)}


# ---------------------------------------------------------------------------
# selectors

def threads() -> int:
    raw = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ConfigError(f"{THREADS_ENV} must be a positive integer, got {raw!r}")
    return n


def resolve_group(name: str) -> FiniteGroup:
    """'s3', 'sN', 'zN' (cyclic) or a JSON group file."""
    key = name.lower()
    if key == "s3":
        return s3()
    m = re.fullmatch(r"s(\d+)", key)
    if m:
        return symmetric_group(int(m.group(1)))
    m = re.fullmatch(r"(?:z|c|cyclic)(\d+)", key)
    if m:
        return cyclic_group(int(m.group(1)))
    if Path(name).is_file():
        return load_group(name)
    raise ConfigError(f"unknown group {name!r}")


def _elements(G: FiniteGroup, spec: str) -> list[int]:
    out = []
    for tok in spec.split(","):
        tok = tok.strip()
        if not tok:
            continue
        if tok.isdigit() and tok not in G.labels:
            out.append(int(tok))
        else:
            out.append(G.index(tok))
    return out


def _is_catalog(name: str) -> bool:
    return name.startswith(("s3/", "sn/")) or name == "octonion"


def resolve_transversal(cfg: RunConfig, name: str | None = None) -> TransversalData:
    """A catalog name, or --group/--subgroup with an optional comma list of representatives."""
    name = name if name is not None else (cfg.transversal[0] if cfg.transversal else None)
    try:
        if name is not None and _is_catalog(name):
            return catalog(name)
        if cfg.group is None:
            raise ConfigError("need --transversal NAME from the catalog or --group with --subgroup")
        G = resolve_group(cfg.group)
        if cfg.subgroup is None:
            raise ConfigError("--subgroup is required with --group")
        sub = cfg.subgroup
        K = generated_subgroup(G, _elements(G, sub[4:])) if sub.startswith("gen:") else make_subgroup(G, _elements(G, sub))
        if name is None:
            return transversal_from_positions(G, K)
        return build_transversal(G, K, _elements(G, name), name=name)
    except (GroupError, KeyError, IndexError, ValueError) as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def parse_size(s: str) -> tuple[int, int]:
    m = re.fullmatch(r"(\d+)[xX](\d+)", s)
    if not m:
        raise ConfigError(f"size must look like WxH, got {s!r}")
    return int(m.group(1)), int(m.group(2))


# ---------------------------------------------------------------------------
# reports

def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, (np.integer,)):
        return int(x)
    if isinstance(x, (np.floating, float)):
        return float(round(float(x), 12))
    if isinstance(x, (np.complexfloating, complex)):
        return [float(round(x.real, 12)), float(round(x.imag, 12))]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    return x


def envelope(cfg: RunConfig, body: dict, identities: Sequence[str] = ()) -> dict:
    return {
        "tool": "kitaev-boundary",
        "version": __version__,
        "catalog": CATALOG_NAMES,
        "config": cfg.to_dict(),
        "seed": cfg.seed,
        "tolerances": TOLERANCES,
        "identities": list(identities),
        **body,
    }


def render_reports(reports: Sequence[Report], cfg: RunConfig) -> tuple[str, bool]:
    ok = all(r.ok for r in reports)
    idents = [f"{r.subject}: {x.identity}" for r in reports for x in r.results]
    if cfg.fmt == "json":
        doc = envelope(cfg, {"ok": ok, "reports": [r.to_dict() for r in reports]}, idents)
        return json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n", ok
    buf = io.StringIO()
    if cfg.fmt == "csv":
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["subject", "identity", "status", "residual", "checked", "witness"])
        for r in reports:
            for x in r.results:
                wit = json.dumps(_jsonable(x.witness), sort_keys=True, ensure_ascii=False) if x.witness else ""
                w.writerow([r.subject, x.identity, x.status, f"{x.residual:.3e}", x.checked, wit])
        return buf.getvalue(), ok
    buf.write(f"kitaev-boundary {__version__}  seed={cfg.seed}  tolerances={TOLERANCES}\n")
    for r in reports:
        buf.write(f"[{'ok' if r.ok else 'FAILED'}] {r.subject}\n")
        for x in r.results:
            line = f"  {x.status.upper():4s} {x.identity}  residual={x.residual:.3e}  checked={x.checked}"
            if x.witness:
                line += f"  witness={json.dumps(_jsonable(x.witness), sort_keys=True, ensure_ascii=False)}"
            buf.write(line + "\n")
    return buf.getvalue(), ok


def emit(text: str, cfg: RunConfig) -> None:
    if cfg.out:
        Path(cfg.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


# ---------------------------------------------------------------------------
# verbs

def _run_parallel(jobs: Sequence[Callable[[], Report]]) -> list[Report]:
    n = threads()
    if n == 1 or len(jobs) == 1:
        return [j() for j in jobs]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(lambda j: j(), jobs))


def cmd_verify(cfg: RunConfig) -> int:
    t = cfg.target
    names = cfg.transversal or [None]
    if t == "matched-pair":
        jobs = [lambda n=n: verify_matched_pair(resolve_transversal(cfg, n)) for n in names]
    elif t == "quasibialgebra":
        jobs = [lambda n=n: verify_quasibialgebra(QuasiHopfData(resolve_transversal(cfg, n))) for n in names]
    elif t == "antipode":
        if cfg.via_twist:
            jobs = [lambda n=n: verify_twisted_antipode(cochain_twist(resolve_transversal(cfg, cfg.via_twist),
                                                                      resolve_transversal(cfg, n))) for n in names]
        else:
            jobs = [lambda n=n: verify_antipode(QuasiHopfData(resolve_transversal(cfg, n))) for n in names]
    elif t == "star":
        jobs = [lambda n=n: verify_star(QuasiHopfData(resolve_transversal(cfg, n))) for n in names]
    elif t == "twist":
        if not (cfg.src and cfg.dst):
            raise ConfigError("verify twist needs --from and --to")
        jobs = [lambda: verify_twist(cochain_twist(resolve_transversal(cfg, cfg.src), resolve_transversal(cfg, cfg.dst)))]
    elif t == "octonion":
        jobs = [verify_octonion]
    elif t == "lattice":
        return cmd_verify_lattice(cfg)
    else:
        raise ConfigError(f"unknown verify target {t!r}")
    text, ok = render_reports(_run_parallel(jobs), cfg)
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def _lattice_inputs(cfg: RunConfig) -> tuple[FiniteGroup, TransversalData | None]:
    if cfg.transversal or cfg.subgroup:
        td = resolve_transversal(cfg)
        return td.group, td
    return resolve_group(cfg.group or "s3"), None


def cmd_verify_lattice(cfg: RunConfig) -> int:
    G, td = _lattice_inputs(cfg)
    text, ok = render_reports([verify_lattice(G, td, seed=cfg.seed)], cfg)
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_multiplicities(cfg: RunConfig) -> int:
    td = resolve_transversal(cfg)
    table = multiplicity_table(td)
    ok = table.residual < INT_TOL
    if cfg.fmt == "csv":
        text = table.to_csv()
    elif cfg.fmt == "json":
        doc = envelope(cfg, {"ok": ok, "residual": table.residual, "table": table.to_json()},
                       ["Frobenius-form multiplicity", "direct-formula multiplicity"])
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        rows, cols = table.row_names(), table.col_names()
        width = max(len(c) for c in cols + rows) + 1
        lines = ["".rjust(width) + "".join(c.rjust(width) for c in cols)]
        for name, row in zip(rows, table.values):
            lines.append(name.rjust(width) + "".join(str(int(v)).rjust(width) for v in row))
        text = "\n".join(lines) + "\n"
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_ribbon_demo(cfg: RunConfig) -> int:
    """Trace ribbons W^{C,π} across a bulk lattice: endpoint excitations and energies per D(G) label."""
    G, _ = _lattice_inputs(cfg)
    w, h = cfg.size or (2, 1)
    lat = build_lattice(G, w, h)
    vac = vacuum_state(lat)
    s0, s1 = ((0, 0), (0, 0)), ((w, h), (w - 1, h - 1))
    rib = ribbon_between(lat, s0, s1)
    rows = []
    for lab in dg_labels(G):
        out = trace_ribbon(vac, rib, lab)
        nrm = out.norm()
        if nrm > TOL:
            out = out.normalized()
        rows.append({"label": dg_label_name(G, lab), "norm": nrm,
                     "energy": round(hamiltonian_energy(out), 12) + 0.0 if nrm > TOL else None,
                     "excited": excited_terms(out) if nrm > TOL else []})
    ok = all(r["norm"] > TOL for r in rows)
    doc = envelope(cfg, {"ok": ok, "lattice": lat.describe(), "ribbon": rib.to_json(lat), "labels": rows},
                   ["trace ribbon excitations"])
    if cfg.fmt == "json":
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["label", "norm", "energy", "excited"])
        for r in rows:
            wr.writerow([r["label"], f"{r['norm']:.6f}", "" if r["energy"] is None else f"{r['energy']:.6f}",
                         " ".join(r["excited"])])
        text = buf.getvalue()
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_condense(cfg: RunConfig) -> int:
    """Boundary projections of W^{C,π}|vac⟩ ending on a left boundary built from the transversal."""
    td = resolve_transversal(cfg) if (cfg.transversal or cfg.subgroup) else catalog("s3/standard")
    G = td.group
    lat = build_lattice(G, 1, 1, {"left": BoundarySpec("smooth", td)})
    vac = vacuum_state(lat)
    rib = ribbon_from_sites(lat, [((0, 0), (-1, 0)), ((0, 0), (0, 0)), ((1, 0), (0, 0))])
    rows = []
    for lab in dg_labels(G):
        c = condense(vac, rib, lab, td)
        rows.append({"bulk": c["bulk"], "agree": c["agree"], "sum_residual": c["sum_residual"],
                     "boundary": [{"label": r["boundary"], "norm": r["norm"], "nonzero": r["nonzero"],
                                   "multiplicity": r["multiplicity"]} for r in c["rows"]]})
    ok = all(r["agree"] and r["sum_residual"] < TOL for r in rows)
    if cfg.fmt == "json":
        doc = envelope(cfg, {"ok": ok, "transversal": td.name, "lattice": lat.describe(), "ribbon": rib.to_json(lat),
                             "labels": rows}, ["nonzero pattern = multiplicity pattern", "projections sum to the state"])
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["bulk", "boundary", "norm", "nonzero", "multiplicity", "agree"])
        for r in rows:
            for b in r["boundary"]:
                wr.writerow([r["bulk"], b["label"], f"{b['norm']:.6f}", int(b["nonzero"]), b["multiplicity"],
                             int(r["agree"])])
        text = buf.getvalue()
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


# -- surgery

def _deterministic(op: str) -> Callable:
    return {"rough-split": rough_split, "smooth-split": smooth_split, "rough-merge": rough_merge,
            "smooth-merge": smooth_merge, "antipode": logical_antipode}[op]


def _measured(op: str, state, seed: int, outcomes: Sequence[str] | None):
    if op == "rough-split":
        out, rec = measured_rough_split(state, seed=seed, outcomes=outcomes)
        return out, rec, {}
    if op == "smooth-split":
        out, rec = measured_smooth_split(state, seed=seed, outcomes=outcomes)
        return out, rec, {}
    if op == "smooth-merge":
        out, rec, cls = measured_smooth_merge(state, seed=seed, outcomes=outcomes)
        G = state.lattice.group
        return out, rec, {"inner_class": [G.labels[s] for s in cls]}
    if op == "rough-merge":
        out, rec, wgt = measured_rough_merge(state, seed=seed, outcomes=outcomes)
        return out, rec, {"weight": wgt}
    raise ConfigError(f"no measured variant of {op!r}")


def _parse_input(G: FiniteGroup, spec: str | None, nparts: int) -> np.ndarray:
    """'h=u' or 'h=u,v' (group basis, one label per part) or 'coeffs=[...]' (JSON nested list)."""
    c = np.zeros((G.order,) * nparts, dtype=np.complex128)
    if spec is None:
        c[(0,) * nparts] = 1
        return c
    key, _, val = spec.partition("=")
    if key == "h":
        idx = tuple(G.index(x.strip()) for x in val.split(","))
        if len(idx) != nparts:
            raise ConfigError(f"this operation takes {nparts} input label(s)")
        c[idx] = 1
        return c
    if key == "coeffs":
        arr = np.array(json.loads(val), dtype=np.complex128)
        if arr.shape != c.shape:
            raise ConfigError(f"coefficients must have shape {c.shape}")
        return arr
    raise ConfigError(f"cannot parse input {spec!r}")


def _parts(G: FiniteGroup, op: str, size: tuple[int, int] | None):
    (m, n), k = SURGERY_OPS[op]
    if size is not None:
        m, n = size
    return [build_patch(G, m, n)] * k


def _vector_rows(G: FiniteGroup, vec) -> list[dict]:
    rows = []
    for idx in np.ndindex(*vec.coeffs.shape):
        a = complex(vec.coeffs[idx])
        if abs(a) > TOL:
            rows.append({"basis": [G.labels[i] for i in idx], "re": round(a.real, 12), "im": round(a.imag, 12)})
    return rows


def _load_script(cfg: RunConfig) -> list[dict]:
    if cfg.script:
        try:
            steps = json.loads(Path(cfg.script).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read script: {exc}") from exc
        out = []
        for s in steps:
            s = {"op": s} if isinstance(s, str) else dict(s)
            if s.get("op") not in SURGERY_OPS:
                raise ConfigError(f"unknown surgery op {s.get('op')!r}")
            out.append(s)
        return out
    if cfg.op not in SURGERY_OPS:
        raise ConfigError(f"--op must be one of {sorted(SURGERY_OPS)}")
    return [{"op": cfg.op, "measured": cfg.measured}]


def cmd_surgery_run(cfg: RunConfig) -> int:
    G = resolve_group(cfg.group or "s3")
    steps = _load_script(cfg)
    replay = None
    if cfg.replay:
        try:
            doc = json.loads(Path(cfg.replay).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            raise ConfigError(f"cannot read record: {exc}") from exc
        replay = [r["steps"] for r in doc.get("records", [])]
    parts = _parts(G, steps[0]["op"], cfg.size)
    state = logical_state(parts, _parse_input(G, cfg.inputs, len(parts)))
    records, extras = [], []
    for i, s in enumerate(steps):
        if s.get("measured"):
            forced = [x["outcome"] for x in replay[len(records)]] if replay is not None else None
            state, rec, extra = _measured(s["op"], state, cfg.seed + i, forced)
            records.append(rec.to_dict())
            extras.append(extra)
        else:
            state = _deterministic(s["op"])(state)
            extras.append({})
    vec = logical_readout(state)
    digest = hashlib.sha256(json.dumps(_jsonable(vec.coeffs), sort_keys=True).encode()).hexdigest()
    ok = vec.residual < TOL
    body = {"ok": ok, "group": G.name, "steps": steps, "output": _vector_rows(G, vec),
            "residual": vec.residual, "output_sha256": digest, "records": records, "branch": extras}
    doc = envelope(cfg, body, ["readout residual"])
    if cfg.fmt == "json":
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["basis", "re", "im"])
        for r in body["output"]:
            wr.writerow([" ".join(r["basis"]), r["re"], r["im"]])
        text = buf.getvalue()
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


def cmd_surgery_table(cfg: RunConfig) -> int:
    if cfg.op not in SURGERY_OPS:
        raise ConfigError(f"--op must be one of {sorted(SURGERY_OPS)}")
    G = resolve_group(cfg.group or "s3")
    parts = _parts(G, cfg.op, cfg.size)
    M = logical_map(_deterministic(cfg.op), parts)
    E = expected_map(G, cfg.op)
    scale = M.flat[np.argmax(np.abs(M))] / E.flat[np.argmax(np.abs(E))]
    M = M / scale
    residual = float(np.max(np.abs(M - E)))
    ok = residual < TOL
    nin = len(parts)
    nout = int(round(np.log(M.shape[0]) / np.log(G.order)))
    cols = [" ".join(G.labels[i] for i in idx) for idx in np.ndindex(*(G.order,) * nin)]
    rows = [" ".join(G.labels[i] for i in idx) for idx in np.ndindex(*(G.order,) * nout)]
    Mr = np.round(M.real, 9) + 0.0
    if cfg.fmt == "json":
        doc = envelope(cfg, {"ok": ok, "group": G.name, "op": cfg.op, "rows": rows, "columns": cols,
                             "matrix": Mr, "residual": residual}, [f"{cfg.op} logical map"])
        text = json.dumps(_jsonable(doc), indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    else:
        buf = io.StringIO()
        wr = csv.writer(buf, lineterminator="\n")
        wr.writerow(["out\\in"] + cols)
        for name, row in zip(rows, Mr):
            wr.writerow([name] + [f"{v:g}" for v in row])
        text = buf.getvalue()
    emit(text, cfg)
    return EXIT_OK if ok else EXIT_FAIL


# ---------------------------------------------------------------------------
# argument parsing

def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--group", help="s3, sN, zN, or a JSON group file")
    p.add_argument("--subgroup", help="comma list of elements, or gen:comma list of generators")
    p.add_argument("--transversal", action="append", default=[],
                   help="catalog name (s3/standard, s3/t2, ..., sn/cyclic/4, octonion) or comma list of representatives")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--format", dest="fmt", choices=["json", "csv", "text"], default="json")
    p.add_argument("--out", help="write the report here instead of stdout")
    p.add_argument("--size", help="WxH")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="kitaev-boundary", description=__doc__)
    ap.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = ap.add_subparsers(dest="verb", required=True, parser_class=_Parser)

    p = sub.add_parser("verify", help="run an identity suite")
    p.add_argument("target", choices=["matched-pair", "quasibialgebra", "antipode", "star", "twist", "lattice", "octonion"])
    p.add_argument("--from", dest="src")
    p.add_argument("--to", dest="dst")
    p.add_argument("--via-twist", dest="via_twist", help="regular source transversal for the twisted antipode")
    _common(p)

    p = sub.add_parser("multiplicities", help="boundary-vs-bulk multiplicity table")
    _common(p)
    p.set_defaults(fmt=None)

    for name, hlp in (("verify-lattice", "lattice representation and commutation suite"),
                      ("ribbon-demo", "trace-ribbon excitations on a bulk lattice"),
                      ("condense", "condensation of bulk labels onto a boundary")):
        _common(sub.add_parser(name, help=hlp))

    p = sub.add_parser("surgery", help="lattice surgery on logical patches")
    p.add_argument("action", choices=["run", "table"])
    p.add_argument("--op", choices=sorted(SURGERY_OPS))
    p.add_argument("--input", dest="inputs", help="h=LABEL[,LABEL] or coeffs=JSON")
    p.add_argument("--measured", action="store_true", help="use the measurement-based variant")
    p.add_argument("--replay", help="report from an earlier measured run whose outcomes are replayed")
    p.add_argument("--script", help="JSON list of surgery ops (strings or {op, measured})")
    _common(p)
    return ap


def config_from_args(ns: argparse.Namespace) -> RunConfig:
    verb = ns.verb
    fmt = ns.fmt if ns.fmt is not None else "csv"
    return RunConfig(
        verb=verb if verb != "surgery" else f"surgery {ns.action}",
        target=getattr(ns, "target", None), group=ns.group, subgroup=ns.subgroup, transversal=list(ns.transversal),
        src=getattr(ns, "src", None), dst=getattr(ns, "dst", None), via_twist=getattr(ns, "via_twist", None),
        size=parse_size(ns.size) if ns.size else None, seed=ns.seed, fmt=fmt, out=ns.out, op=getattr(ns, "op", None),
        inputs=getattr(ns, "inputs", None), measured=getattr(ns, "measured", False),
        replay=getattr(ns, "replay", None), script=getattr(ns, "script", None),
    )


HANDLERS: dict[str, Callable[[RunConfig], int]] = {
    "verify": cmd_verify,
    "multiplicities": cmd_multiplicities,
    "verify-lattice": cmd_verify_lattice,
    "ribbon-demo": cmd_ribbon_demo,
    "condense": cmd_condense,
    "surgery run": cmd_surgery_run,
    "surgery table": cmd_surgery_table,
}


def main(argv: Sequence[str] | None = None) -> int:
    try:
        ns = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = config_from_args(ns)
        threads()
        return HANDLERS[cfg.verb](cfg)
    except PreconditionError as exc:
        print(f"precondition: {exc}", file=sys.stderr)
        return EXIT_PRECONDITION
    except BudgetError as exc:
        print(f"budget: {exc}", file=sys.stderr)
        return EXIT_BUDGET
    except SurgeryError as exc:
        print(f"surgery: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ConfigError, GroupError, LatticeError) as exc:
        print(f"config: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    raise SystemExit(main())
