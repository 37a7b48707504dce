"""Experiment runner: configuration, subcommands and canonical report emission.

Every subcommand builds a :class:`ReportDocument`, writes it with its
companion CSV and two-column curve files to the output directory, and maps
the overall status to an exit code (0 pass or warn, 1 fail, 2 usage or
configuration error, 3 solver divergence).
"""
from __future__ import annotations

import argparse
import configparser
import dataclasses
import datetime as _dt
import hashlib
import json
import math
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .audit import INFO, AuditReport
from .decomposition import (
    bump_initial_data,
    decay_audit,
    divergence_free_bump,
    make_partition,
    partition_audit,
    support_audit,
)
from .errors import ConfigError, NSLabError
from .fixedpoint import M_VARIANTS, compute_N, default_initial_guess, select_epsilon, solve_fixed_point
from .grid import save_field
from .march import COMPONENTS, SolverConfig, global_l2_ledger, interface_audit, march, theorem11_audit
from .operators import FlowState, assemble_I, initial_trace_audit, lemma32_audit, lemma32_discrepancy, observed_order
from .oracle import oracle_I, polynomial_fields, relative_error, smooth_fields

SCHEMA = "nslab-report"
SCHEMA_VERSION = 1
ENV_OUT = "NSLAB_OUT"
COMMANDS = ("partition", "gen-data", "audit-lemma", "solve", "march", "audit-all", "convergence")
EXIT_PASS, EXIT_FAIL, EXIT_USAGE, EXIT_DIVERGENCE = 0, 1, 2, 3
EXACT_FLOOR = 1e-8
PROFILES = ("bump", "polynomial", "smooth")
STUDIES = ("lemma", "oracle")

# config-file section of every RunConfig key
SECTIONS = {
    "partition": ("cells", "side", "margin", "anchor"),
    "grid": ("grid_n", "n_t", "refine", "levels", "oracle_r"),
    "data": ("amplitude", "profile", "divergence_free", "decay_k", "seed"),
    "solver": ("tol", "max_iter", "safety", "m_variant", "divergence_factor"),
    "run": ("horizon", "study", "out"),
}


@dataclass
class RunConfig:
    cells: int = 1
    side: float = 1.0
    margin: float = 0.1
    anchor: str = "corner"
    grid_n: int = 8
    n_t: int | None = None
    refine: int = 2
    levels: int = 3
    oracle_r: int = 8
    amplitude: float = 1e-3
    profile: str = "bump"
    divergence_free: bool = False
    decay_k: float = 2.0
    seed: int = 0
    tol: float = 1e-9
    max_iter: int = 500
    safety: float = 1.0
    m_variant: str = "step2"
    divergence_factor: float = 10.0
    horizon: int = 2
    study: str = "lemma"
    out: str = ""

    def validate(self) -> "RunConfig":
        def need(key, ok, msg):
            if not ok:
                raise ConfigError(key, f"{msg}, got {getattr(self, key)!r}")

        need("cells", self.cells >= 1, "must be >= 1")
        need("side", self.side >= 1.0, "cell side must be >= 1")
        need("margin", 0.0 < self.margin < 0.5, "must lie in (0, 0.5)")
        need("anchor", self.anchor in ("corner", "center"), "must be corner or center")
        need("grid_n", self.grid_n >= 5, "need at least 5 nodes per axis")
        need("n_t", self.n_t is None or self.n_t >= 5, "need at least 5 time nodes")
        need("refine", self.refine >= 2, "refinement factor must be >= 2")
        need("levels", self.levels >= 1, "must be >= 1")
        need("oracle_r", self.oracle_r >= 1, "must be >= 1")
        need("amplitude", self.amplitude >= 0.0 and math.isfinite(self.amplitude), "must be finite and >= 0")
        need("profile", self.profile in PROFILES, f"must be one of {PROFILES}")
        need("decay_k", self.decay_k >= 0.0, "must be >= 0")
        need("seed", self.seed >= 0, "must be >= 0")
        need("tol", self.tol > 0.0, "must be > 0")
        need("max_iter", self.max_iter >= 1, "must be >= 1")
        need("safety", 0.0 < self.safety <= 1.0, "must lie in (0, 1]")
        need("m_variant", self.m_variant in M_VARIANTS, f"must be one of {M_VARIANTS}")
        need("divergence_factor", self.divergence_factor > 1.0, "must be > 1")
        need("horizon", self.horizon >= 1, "must be >= 1")
        need("study", self.study in STUDIES, f"must be one of {STUDIES}")
        return self

    def solver(self) -> SolverConfig:
        return SolverConfig(self.grid_n, self.n_t, self.tol, self.max_iter, self.divergence_factor)

    def echo(self) -> dict:
        d = dataclasses.asdict(self)
        d.pop("out")  # output location does not change results
        return d


_FIELDS = {f.name: f for f in dataclasses.fields(RunConfig)}


def _coerce(key: str, raw):
    """Convert a string (or value) to the type of RunConfig field ``key``."""
    default = _FIELDS[key].default
    if not isinstance(raw, str):
        return raw
    text = str(raw).strip()
    try:
        if key == "n_t":
            return None if text.lower() in ("", "none") else int(text)
        if isinstance(default, bool):
            if text.lower() in ("1", "true", "yes", "on"):
                return True
            if text.lower() in ("0", "false", "no", "off"):
                return False
            raise ValueError(text)
        if isinstance(default, int):
            return int(text)
        if isinstance(default, float):
            return float(text)
    except ValueError:
        raise ConfigError(key, f"cannot parse {text!r}") from None
    return text


def read_config_file(path) -> dict:
    """Flat key = value sections; unknown sections or keys are rejected."""
    parser = configparser.ConfigParser(interpolation=None)
    try:
        with open(path) as fh:
            parser.read_file(fh)
    except (OSError, configparser.Error) as exc:
        raise ConfigError("config", str(exc)) from None
    values = {}
    for section in parser.sections():
        if section not in SECTIONS:
            raise ConfigError(section, "unknown config section")
        for key, raw in parser.items(section):
            if key not in SECTIONS[section]:
                raise ConfigError(key, f"unknown key in section [{section}]")
            values[key] = _coerce(key, raw)
    return values


def build_config(overrides: dict | None = None, path=None) -> RunConfig:
    """Defaults, then the config file, then explicit overrides; validated."""
    values = read_config_file(path) if path else {}
    for key, val in (overrides or {}).items():
        if key not in _FIELDS:
            raise ConfigError(key, "unknown key")
        if val is not None:
            values[key] = _coerce(key, val)
    cfg = RunConfig(**values)
    if not cfg.out:
        cfg.out = os.environ.get(ENV_OUT, "nslab-out")
    return cfg.validate()


# ----------------------------------------------------------------- reports


@dataclass
class ReportDocument:
    command: str
    config: dict
    sections: list = field(default_factory=list)
    tables: dict = field(default_factory=dict)  # name -> (header, rows)
    curves: dict = field(default_factory=dict)  # name -> (xlabel, ylabel, xs, ys)
    measured: dict = field(default_factory=dict)
    diverged: bool = False
    timestamp: str = ""

    @property
    def status(self) -> str:
        return AuditReport("document", sections=list(self.sections)).status

    def exit_code(self) -> int:
        if self.diverged:
            return EXIT_DIVERGENCE
        return EXIT_FAIL if self.status == "fail" else EXIT_PASS

    def artifacts(self) -> dict:
        files = {name: f"{name}.csv" for name in sorted(self.tables)}
        files.update({name: f"{name}.dat" for name in sorted(self.curves)})
        return files

    def body(self) -> dict:
        """Everything except the timestamp; this is what the content hash covers."""
        return {
            "schema": SCHEMA,
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "config": self.config,
            "provenance": {"package": "nslab", "version": __version__},
            "status": self.status,
            "exit_code": self.exit_code(),
            "sections": [s.to_dict() for s in self.sections],
            "measured": self.measured,
            "artifacts": self.artifacts(),
        }


def _canonical(obj):
    """Recursively convert to JSON-safe types with a fixed float formatting."""
    if isinstance(obj, dict):
        return {str(k): _canonical(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_canonical(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")
        return float(f"{x:.15e}")
    if obj is None or isinstance(obj, str):
        return obj
    return str(obj)


def serialize(doc: ReportDocument) -> str:
    """Canonical bytes: sorted keys, fixed float format, hash over the timestamp-free body."""
    body = _canonical(doc.body())
    text = json.dumps(body, sort_keys=True, indent=2)
    full = dict(body)
    full["content_sha256"] = hashlib.sha256(text.encode()).hexdigest()
    full["provenance"] = dict(body["provenance"], timestamp=doc.timestamp)
    return json.dumps(full, sort_keys=True, indent=2) + "\n"


def strip_timestamp(text: str) -> str:
    obj = json.loads(text)
    obj["provenance"].pop("timestamp", None)
    return json.dumps(obj, sort_keys=True, indent=2)


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return str(int(x))
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return f"{float(x):.15e}"


def emit_report(doc: ReportDocument, directory) -> list:
    """Write ``report.json`` plus every table and curve; returns the written paths."""
    d = Path(directory)
    if not doc.timestamp:
        doc.timestamp = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    written = []
    try:
        d.mkdir(parents=True, exist_ok=True)
        for name, (header, rows) in sorted(doc.tables.items()):
            p = d / f"{name}.csv"
            lines = [",".join(header)] + [",".join(_fmt(v) for v in row) for row in rows]
            p.write_text("\n".join(lines) + "\n")
            written.append(p)
        for name, (xl, yl, xs, ys) in sorted(doc.curves.items()):
            p = d / f"{name}.dat"
            lines = [f"# {xl} {yl}"] + [f"{_fmt(x)} {_fmt(y)}" for x, y in zip(xs, ys)]
            p.write_text("\n".join(lines) + "\n")
            written.append(p)
        p = d / "report.json"
        p.write_text(serialize(doc))
        written.append(p)
    except OSError as exc:
        raise ConfigError("out", f"cannot write to {d}: {exc}") from None
    return written


# ----------------------------------------------------------------- commands


def _cells(cfg: RunConfig):
    return make_partition(cfg.cells, cfg.side, cfg.margin, cfg.m_variant, cfg.anchor)


def _cell_data(cfg: RunConfig, cell):
    g = cell.grid(cfg.grid_n, n_t=cfg.n_t)
    make = divergence_free_bump if cfg.divergence_free else bump_initial_data
    return make(cell, g, cfg.amplitude, cfg.decay_k)


def _budget(cfg: RunConfig, cell, fields):
    return select_epsilon(cell.M, compute_N(*fields), cell.mu, cfg.safety)


def cmd_partition(cfg: RunConfig, doc: ReportDocument):
    cells = _cells(cfg)
    doc.sections.append(partition_audit(cells))
    doc.tables["cells"] = (
        ["j", "x_lo", "x_hi", "inner_x_lo", "inner_x_hi", "mu", "M"],
        [[c.j, *c.box[0], *c.inner_box[0], c.mu, c.M] for c in cells],
    )


def cmd_gen_data(cfg: RunConfig, doc: ReportDocument, out: Path):
    rows = []
    for cell in _cells(cfg):
        fields, (K, k) = _cell_data(cfg, cell)
        da = decay_audit(fields, K, k)
        da.name = f"decay_cell{cell.j}"
        doc.sections.append(da)
        sa = AuditReport(f"support_cell{cell.j}")
        for name, f in zip(COMPONENTS, fields):
            sa.check(name, support_audit(f, cell.inner_box).checks[0].value, 0.0)
            save_field(out / "data" / f"cell{cell.j}_{name}0.npz", f, f"{name}0")
        doc.sections.append(sa)
        b = _budget(cfg, cell, fields)
        rows.append([cell.j, K, k, b.N, b.M, b.epsilon, max(f.max_abs() for f in fields)])
    doc.tables["data"] = (["j", "K", "k", "N", "M", "epsilon", "sup"], rows)


def _preset_state(cfg: RunConfig, n: int):
    fs = polynomial_fields(cfg.seed) if cfg.profile == "polynomial" else smooth_fields(cfg.seed)
    cell = _cells(cfg)[0]
    g = cell.grid(n, n_t=n if cfg.n_t is None else cfg.n_t)
    s = FlowState.from_functions(g, *fs)
    return s, cell.anchor(g), fs


def cmd_audit_lemma(cfg: RunConfig, doc: ReportDocument):
    if cfg.profile == "bump":
        raise ConfigError("profile", "audit-lemma needs the polynomial or smooth preset")
    s, anchor, _ = _preset_state(cfg, cfg.grid_n)
    if cfg.profile == "polynomial":
        rep = lemma32_audit(s, s, anchor, 1, tol=EXACT_FLOOR)
    else:
        n2 = (cfg.grid_n - 1) * cfg.refine + 1
        s2, a2, _ = _preset_state(cfg, n2)
        rep = lemma32_audit(s, s, anchor, 1, refined=(s2, s2, a2), ratio=cfg.refine)
    doc.sections.append(rep)


def _solve_cell(cfg: RunConfig, cell, fields):
    g = fields[0].grid
    b = _budget(cfg, cell, fields)
    guess = default_initial_guess(g, fields)
    state, rep = solve_fixed_point(guess, fields, cell.anchor(g), 1, b, cfg.tol, cfg.max_iter, cfg.divergence_factor)
    return state, rep, b


def cmd_solve(cfg: RunConfig, doc: ReportDocument):
    cell = _cells(cfg)[0]
    fields, _ = _cell_data(cfg, cell)
    state, rep, b = _solve_cell(cfg, cell, fields)
    sec = AuditReport("solve")
    sec.check("converged", rep.final_operator_norm, rep.tol, passed=rep.converged, note=rep.stop_reason)
    sec.check("iterations", float(rep.iterations), status=INFO)
    sec.check("nse_residual_divergence_form", rep.final_residual, status=INFO)
    sec.check("nse_residual_convective_form", rep.final_residual_convective, status=INFO)
    sec.measure("report", rep.to_dict())
    sec.measure("budget", b.to_dict())
    doc.sections.append(sec)
    out = assemble_I(state, fields, cell.anchor(state.grid), 1)
    doc.sections.append(initial_trace_audit(out, state, fields, tol=1e-6))
    doc.diverged = rep.stop_reason == "divergence"
    header = ["iter", "normI1", "normI2", "normI3", "normI4", "step_ratio", "maxnorm_u", "maxnorm_v", "maxnorm_w", "maxnorm_p", "in_ball"]
    doc.tables["fixedpoint_trace"] = (header, list(rep.csv_rows()))
    its = list(range(len(rep.operator_norm_trace)))
    for k in range(4):
        doc.curves[f"iter_vs_normI{k + 1}"] = ("iter", f"normI{k + 1}", its, [t[k] for t in rep.operator_norm_trace])


def _dump_trajectory(traj, out: Path) -> list:
    entries = []
    for iv in traj.intervals:
        files = {}
        for name, f in zip(COMPONENTS, iv.state.components):
            rel = f"trajectory/cell{traj.cell.j}_m{iv.m}_{name}.npz"
            save_field(out / rel, f, name)
            files[name] = rel
        entries.append({
            "cell": traj.cell.j, "m": iv.m, "t_bounds": list(iv.state.grid.bounds[0]),
            "counts": list(iv.state.grid.counts), "stop_reason": iv.report.stop_reason,
            "iterations": iv.report.iterations, "files": files,
        })
    return entries


def _run_march(cfg: RunConfig):
    cells, trajs, data, budgets = _cells(cfg), [], [], []
    for cell in cells:
        fields, cert = _cell_data(cfg, cell)
        b = _budget(cfg, cell, fields)
        trajs.append(march(cell, *fields, cfg.horizon, b, cfg.solver()))
        data.append((fields, cert))
        budgets.append(b)
    return cells, trajs, data, budgets


def _ledger_times(trajs):
    reach = min((t.intervals[-1].m for t in trajs if t.intervals), default=0)
    return [float(t) for t in range(0, reach + 1)]


def cmd_march(cfg: RunConfig, doc: ReportDocument, out: Path):
    cells, trajs, _, _ = _run_march(cfg)
    manifest = []
    for traj in trajs:
        if len(traj.intervals) >= 2:
            ia = interface_audit(traj, value_tol=cfg.tol)
            ia.name = f"interface_cell{traj.cell.j}"
            doc.sections.append(ia)
        conv = AuditReport(f"march_cell{traj.cell.j}")
        for iv in traj.intervals:
            conv.check(f"m{iv.m}", iv.report.final_operator_norm, iv.report.tol, passed=iv.report.converged, note=iv.report.stop_reason)
        doc.sections.append(conv)
        manifest.extend(_dump_trajectory(traj, out))
        doc.diverged |= traj.stop_reason == "divergence"
    entries = [global_l2_ledger(cells, trajs, t) for t in _ledger_times(trajs)]
    _ledger_table(doc, entries)
    (out / "trajectory").mkdir(parents=True, exist_ok=True)
    (out / "trajectory" / "manifest.json").write_text(json.dumps(_canonical(manifest), sort_keys=True, indent=2) + "\n")
    doc.measured["manifest"] = "trajectory/manifest.json"


def _ledger_table(doc, entries):
    if not entries:
        return
    ncell = len(entries[0].integrals)
    header = ["t"] + [f"cell{c + 1}_{n}" for c in range(ncell) for n in COMPONENTS]
    header += [f"total_{n}" for n in COMPONENTS] + ["bound"]
    rows = []
    for e in entries:
        rows.append([e.t] + [e.integrals[c][n] for c in range(ncell) for n in COMPONENTS] + [e.totals[n] for n in COMPONENTS] + [e.bound])
    doc.tables["l2_ledger"] = (header, rows)


def cmd_audit_all(cfg: RunConfig, doc: ReportDocument):
    cells, trajs, data, budgets = _run_march(cfg)
    doc.sections.append(partition_audit(cells))
    master = theorem11_audit(cells, trajs, data, budgets, times=_ledger_times(trajs), value_tol=cfg.tol)
    doc.sections.append(master)
    doc.diverged = any(t.stop_reason == "divergence" for t in trajs)
    entries = [global_l2_ledger(cells, trajs, t) for t in _ledger_times(trajs)]
    _ledger_table(doc, entries)
    for traj in trajs:
        for iv in traj.intervals:
            tr = iv.report.operator_norm_trace
            doc.curves[f"cell{traj.cell.j}_m{iv.m}_iter_vs_normI1"] = ("iter", "normI1", list(range(len(tr))), [t[0] for t in tr])


def convergence_study(cfg: RunConfig) -> AuditReport:
    """Rerun the lemma or oracle comparison on grids h, h/r, ... and report observed orders.

    For the oracle study the reference resolution is held fixed at
    ``(grid_n - 1) * oracle_r + 1`` nodes per axis, so ``oracle_r`` must be
    divisible by ``refine ** (levels - 1)``.
    """
    if cfg.levels < 2:
        raise ConfigError("levels", "a convergence study needs at least 2 levels")
    r = cfg.refine
    ns = [(cfg.grid_n - 1) * r**lvl + 1 for lvl in range(cfg.levels)]
    report = AuditReport(f"convergence_{cfg.study}")
    errs, hs = [], []
    for lvl, n in enumerate(ns):
        s, anchor, fs = _preset_state(cfg, n)
        if cfg.study == "lemma":
            e = max(lemma32_discrepancy(s, s, anchor, 1))
        else:
            ratio = cfg.oracle_r // r**lvl
            if ratio * r**lvl != cfg.oracle_r or ratio < 1:
                raise ConfigError("oracle_r", f"must be divisible by refine**(levels-1) = {r ** (cfg.levels - 1)}")
            ref = oracle_I(s.grid, *fs, anchor=anchor, r=ratio)
            e = max(relative_error(assemble_I(s, s, anchor), ref))
        errs.append(e)
        hs.append(s.grid.h_x)
    orders = [observed_order(a, b, r) for a, b in zip(errs, errs[1:])]
    exact = all(e <= EXACT_FLOOR for e in errs)
    for lvl, (n, e) in enumerate(zip(ns, errs)):
        report.check(f"level{lvl}_n{n}", e, status=INFO)
    for lvl, o in enumerate(orders):
        report.check(f"order_{lvl}_{lvl + 1}", o, status=INFO)
    report.measure("regime", "exact" if exact else "convergent")
    report.measure("grid_n", ns)
    report.measure("h", hs)
    report.measure("discrepancy", errs)
    report.measure("order", orders)
    return report


def cmd_convergence(cfg: RunConfig, doc: ReportDocument):
    if cfg.profile == "bump":
        raise ConfigError("profile", "convergence needs the polynomial or smooth preset")
    rep = convergence_study(cfg)
    doc.sections.append(rep)
    hs, errs = rep.measured["h"], rep.measured["discrepancy"]
    doc.curves[f"h_vs_discrepancy_{cfg.study}"] = ("h", "discrepancy", hs, errs)
    orders = rep.measured["order"]
    doc.tables["order_table"] = (["level", "grid_n", "h", "discrepancy", "order"],
                                 [[i, n, h, e, orders[i - 1] if i else float("nan")]
                                  for i, (n, h, e) in enumerate(zip(rep.measured["grid_n"], hs, errs))])


def run(command: str, cfg: RunConfig, timestamp: str | None = None) -> tuple:
    """Execute ``command`` and emit its report; returns ``(exit_code, document)``."""
    if command not in COMMANDS:
        raise ConfigError("command", f"must be one of {COMMANDS}")
    out = Path(cfg.out)
    doc = ReportDocument(command=command, config=cfg.echo(), timestamp=timestamp or "")
    if command == "partition":
        cmd_partition(cfg, doc)
    elif command == "gen-data":
        cmd_gen_data(cfg, doc, out)
    elif command == "audit-lemma":
        cmd_audit_lemma(cfg, doc)
    elif command == "solve":
        cmd_solve(cfg, doc)
    elif command == "march":
        cmd_march(cfg, doc, out)
    elif command == "audit-all":
        cmd_audit_all(cfg, doc)
    else:
        cmd_convergence(cfg, doc)
    emit_report(doc, out)
    return doc.exit_code(), doc


# ----------------------------------------------------------------- argparse


class _ArgumentError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # report usage errors through the exit-code contract instead of SystemExit
    def error(self, message):
        raise _ArgumentError(message)


def _parser() -> argparse.ArgumentParser:
    d = RunConfig()
    p = _Parser(
        prog="nslab",
        description="Discrete audits of the integral-operator construction for the 3-D incompressible Navier-Stokes equations.",
    )
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value config file with sections " + ", ".join(f"[{s}]" for s in SECTIONS))
    p.add_argument("--cells", type=int, help=f"number of cells J (default {d.cells})")
    p.add_argument("--side", type=float, help=f"cell edge length, >= 1 (default {d.side})")
    p.add_argument("--margin", type=float, help=f"inner box margin as a fraction of the side (default {d.margin})")
    p.add_argument("--anchor", choices=("corner", "center"), help=f"integration anchor (default {d.anchor})")
    p.add_argument("--grid-n", type=int, dest="grid_n", help=f"nodes per spatial axis (default {d.grid_n})")
    p.add_argument("--n-t", type=int, dest="n_t", help="time nodes per unit interval (default: grid-n)")
    p.add_argument("--refine", type=int, help=f"refinement factor of the convergence study (default {d.refine})")
    p.add_argument("--levels", type=int, help=f"grid levels of the convergence study (default {d.levels})")
    p.add_argument("--oracle-r", type=int, dest="oracle_r", help=f"oracle resolution factor (default {d.oracle_r})")
    p.add_argument("--amplitude", type=float, help=f"bump amplitude (default {d.amplitude})")
    p.add_argument("--profile", choices=PROFILES, help=f"data profile (default {d.profile})")
    p.add_argument("--divergence-free", dest="divergence_free", action="store_const", const=True,
                   help="use the curl of the bump instead of the bump in every component")
    p.add_argument("--decay-k", type=float, dest="decay_k", help=f"decay exponent of the certificate (default {d.decay_k})")
    p.add_argument("--seed", type=int, help=f"seed of the random presets (default {d.seed})")
    p.add_argument("--tol", type=float, help=f"solver tolerance on max sup|I_k| (default {d.tol})")
    p.add_argument("--max-iter", type=int, dest="max_iter", help=f"iteration budget (default {d.max_iter})")
    p.add_argument("--safety", type=float, help=f"epsilon safety factor in (0, 1] (default {d.safety})")
    p.add_argument("--m-variant", dest="m_variant", choices=M_VARIANTS, help=f"norm-cap formula (default {d.m_variant})")
    p.add_argument("--divergence-factor", type=float, dest="divergence_factor",
                   help=f"divergence threshold in units of (1+eps)M (default {d.divergence_factor})")
    p.add_argument("--horizon", type=int, help=f"number of unit time intervals (default {d.horizon})")
    p.add_argument("--study", choices=STUDIES, help=f"convergence study target (default {d.study})")
    p.add_argument("--out", help=f"output directory (default ${ENV_OUT} or nslab-out)")
    p.add_argument("--timestamp", help=argparse.SUPPRESS)
    return p


def main(argv=None) -> int:
    parser = _parser()
    try:
        args = parser.parse_args(argv)
    except _ArgumentError as exc:
        parser.print_usage(sys.stderr)
        print(f"nslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    overrides = {k: v for k, v in vars(args).items() if k not in ("command", "config", "timestamp") and v is not None}
    try:
        cfg = build_config(overrides, args.config)
        code, doc = run(args.command, cfg, args.timestamp)
    except ConfigError as exc:
        print(f"nslab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except NSLabError as exc:
        print(f"nslab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    print(f"{args.command}: {doc.status} (exit {code}) -> {Path(cfg.out) / 'report.json'}")
    return code


if __name__ == "__main__":
    sys.exit(main())
