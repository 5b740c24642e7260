"""Command-line entry point.

Every subcommand writes its outputs plus a ``manifest.json`` into
``<output root>/<command>-<digest prefix>/``. The output root is taken from
``--out``, else ``$SUPERCRIT_OUT``, else ``./supercrit-out``. Exit codes:
0 completed, 1 invalid input (flags, config, output directory), 2 runtime
halt (blow-up, failed self-test). Errors are also printed to stderr as one
JSON object.
"""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from supercrit import __version__
from supercrit import harness as hz
from supercrit import shells, spectral as sp, weights
from supercrit.solver import ConfigError, SolverConfig, run

OUT_ENV = "SUPERCRIT_OUT"
CHECK_IDS = ("3.6", "3.7", "3.9", "3.15", "3.17", "linf")

PRESET_CONFIGS = {
    "tg2d": dict(d=2, N=32, nu=0.01, dt=2e-3, T=0.5, initial="tg2d", trace_every=25),
    "tg3d": dict(d=3, N=32, nu=0.05, dt=5e-3, T=0.25, initial="tg3d", trace_every=10),
    "random": dict(d=3, N=32, nu=0.05, dt=5e-3, T=0.25, initial="random", seed=0, kmax=8.0, trace_every=10),
}


class UsageError(Exception):
    """Bad flags or arguments; maps to exit status 1."""


class Halt(Exception):
    """Runtime halt; maps to exit status 2."""


@dataclass
class RunManifest:
    command: str
    config_digest: str
    version: str
    seed: int | None
    outputs: list[str] = field(default_factory=list)
    duration: float | None = None

    def write(self, directory: Path) -> Path:
        path = directory / "manifest.json"
        _write_json(path, asdict(self))
        return path


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# --- helpers ---------------------------------------------------------------------

def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else str(v)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.bool_):
        return bool(obj)
    return obj


def _write_json(path: Path, data) -> None:
    path.write_text(json.dumps(_jsonable(data), indent=2, sort_keys=True) + "\n")


def _digest(payload) -> str:
    blob = json.dumps(_jsonable(payload), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _float_list(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError as exc:
        raise UsageError(f"expected a comma-separated list of numbers, got {text!r}") from exc


def _output_dir(args, command: str, digest: str) -> Path:
    root = Path(args.out or os.environ.get(OUT_ENV) or "supercrit-out")
    directory = root / f"{command.replace(' ', '-')}-{digest[:12]}"
    try:
        directory.mkdir(parents=True, exist_ok=True)
        probe = directory / ".write-test"
        probe.write_text("")
        probe.unlink()
    except OSError as exc:
        raise UsageError(f"output directory {directory} is not writable: {exc}") from exc
    return directory


def _load_config(path) -> SolverConfig:
    return SolverConfig.from_json(path)


class _Context:
    """Collects outputs of one command and writes the manifest."""

    def __init__(self, args, command: str, resolved: dict, seed=None):
        self.args = args
        self.command = command
        self.resolved = resolved
        self.digest = _digest({"command": command, **resolved})
        self.seed = seed
        self.start = time.perf_counter()
        self.dir = _output_dir(args, command, self.digest)
        self.outputs: list[str] = []

    def path(self, name: str) -> Path:
        self.outputs.append(name)
        return self.dir / name

    def finish(self) -> Path:
        duration = None if self.args.deterministic else round(time.perf_counter() - self.start, 6)
        manifest = RunManifest(self.command, self.digest, __version__, self.seed, sorted(self.outputs), duration)
        return manifest.write(self.dir)


def _dry_run(command: str, resolved: dict) -> int:
    print(json.dumps(_jsonable({"command": command, "dry_run": True, "resolved": resolved}), indent=2, sort_keys=True))
    return 0


# --- weights -------------------------------------------------------------------------

def cmd_weights_verify(args) -> int:
    resolved = {"max_j": args.max_j, "max_n": args.max_n, "tol": args.tol}
    if args.max_j < 4 or args.max_n < 4:
        raise UsageError("--max-j and --max-n must be >= 4")
    if args.dry_run:
        return _dry_run("weights verify", resolved)
    ctx = _Context(args, "weights verify", resolved)
    b_rep = weights.verify_b_bound(args.max_j, tol=args.tol)
    count_rep = weights.verify_window_count_bound(args.max_n)
    avg = weights.averaging_sums(args.max_n)
    margins = ctx.path("averaging_margins.csv")
    avg.write_csv(margins)
    report = {
        "lemma_3_1": {**b_rep.to_dict(), "max_slack": b_rep.max_slack},
        "lemma_3_2": count_rep.to_dict(),
        "averaging": {**avg.summary(), "margins_csv_path": str(margins)},
    }
    _write_json(ctx.path("weights_report.json"), report)
    ctx.finish()
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    return 0


# --- norms self-test ----------------------------------------------------------------

def _selftest_results(seed: int) -> dict[str, dict]:
    out = {}

    def record(name, value, tol, ok=None):
        ok = (value <= tol) if ok is None else ok
        out[name] = {"pass": bool(ok), "value": float(value), "tol": tol}

    rng = np.random.default_rng(seed)
    for d, N in ((2, 32), (3, 16)):
        f = sp.random_solenoidal(d, N, seed=seed + d, kmax=N / 4)
        phys = sp.transform_to_physical(f)
        back = sp.transform_to_spectral(phys)
        record(f"roundtrip_d{d}", sp.l2_norm(back - f) / sp.l2_norm(f), 1e-12)
        quad = float(np.sum(phys ** 2)) * (sp.TWO_PI / N) ** d
        record(f"parseval_d{d}", abs(quad - sp.l2_norm_sq(f)) / sp.l2_norm_sq(f), 1e-12)
        prof = sp.shell_profile(f)
        for s in (0.0, 0.5, 1.0):
            direct, via = sp.hdot_norm(f, s), shells.hdot_norm(prof, s)
            # shells use 2**j in place of |xi|, so the two agree within a factor 2**|s|
            ratio = via / direct
            record(f"shell_hdot_bracket_d{d}_s{s:g}", 0.0, 0.0, ok=2.0 ** (-abs(s)) - 1e-12 <= ratio <= 2.0 ** abs(s) + 1e-12)
        record(f"x1_vs_critical_d{d}", 0.0, 0.0, ok=shells.x1_norm(prof) <= shells.critical_norm(prof) * (1 + 1e-12))
        record(f"linf_vs_l1_d{d}", 0.0, 0.0, ok=sp.linf_norm(f) <= sp.l1_coeff_norm(f) * (1 + 1e-12))
        record(f"leray_idempotent_d{d}", sp.l2_norm(sp.leray_project(f) - f) / sp.l2_norm(f), 1e-13)
        record(f"divergence_d{d}", sp.divergence_residual(f), 1e-12)
        k = float(rng.uniform(1.5, N / 4))
        lo, hi = sp.low_pass(f, k), sp.high_pass(f, k)
        record(f"cutoff_orthogonality_d{d}", abs(sp.inner(lo, hi)) / sp.l2_norm_sq(f), 1e-14)
    for l in range(1, 5):
        p = shells.ShellProfile.from_magnitudes(3, {int(j): float(c) for j, c in
                                                    zip(rng.integers(-5, 30, 6), rng.uniform(0.1, 2, 6))})
        q = shells.dilate(p, l)
        same = list(p.weighted().values()) == list(q.weighted().values())
        record(f"dilation_critical_invariance_l{l}", 0.0, 0.0, ok=same)
    return out


def cmd_norms_selftest(args) -> int:
    resolved = {"seed": args.seed}
    if args.dry_run:
        return _dry_run("norms selftest", resolved)
    ctx = _Context(args, "norms selftest", resolved, seed=args.seed)
    results = _selftest_results(args.seed)
    report = {"pass": all(r["pass"] for r in results.values()), "checks": results}
    _write_json(ctx.path("selftest.json"), report)
    ctx.finish()
    print(json.dumps(_jsonable(report), indent=2, sort_keys=True))
    if not report["pass"]:
        raise Halt("norm self-test failed: " + ", ".join(k for k, r in results.items() if not r["pass"]))
    return 0


# --- simulate --------------------------------------------------------------------------

def cmd_simulate(args) -> int:
    cfg = _load_config(args.config)
    resolved = cfg.to_dict()
    if args.dry_run:
        return _dry_run("simulate", resolved)
    ctx = _Context(args, "simulate", resolved, seed=cfg.seed)
    snap_dir = None
    if cfg.snapshot_every > 0:
        snap_dir = ctx.dir / "snapshots"
        snap_dir.mkdir(exist_ok=True)
    result = run(cfg, snapshot_dir=snap_dir)
    if snap_dir is not None:
        for p in sorted(snap_dir.iterdir()):
            ctx.outputs.append(f"snapshots/{p.name}")
    result.write_csv(ctx.path("trace.csv"))
    sidecar = sp.save_snapshot(result.final, ctx.path("final.bin"))
    ctx.outputs.append(sidecar.name)
    summary = {
        "halted": result.halted,
        "message": result.message,
        "n_records": len(result.records),
        "final_time": result.records[-1].time,
        "energy0": result.energy0,
        "final_energy": result.records[-1].energy,
        "max_energy_balance_residual": result.max_balance_residual(),
        "max_divergence_residual": max(r.divergence for r in result.records),
    }
    _write_json(ctx.path("summary.json"), summary)
    ctx.finish()
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    if result.halted:
        raise Halt(result.message)
    return 0


# --- harness -----------------------------------------------------------------------------

def _subsample(items: list, n: int) -> list:
    if n <= 0 or len(items) <= n:
        return items
    idx = np.unique(np.linspace(0, len(items) - 1, n).round().astype(int))
    return [items[i] for i in idx]


def run_checks(states, ids, checks, k_list, s_values) -> dict[str, list[hz.InequalityReport]]:
    """Evaluate the requested checks; returns check id -> reports."""
    out: dict[str, list[hz.InequalityReport]] = {}

    def put(key, rep):
        out.setdefault(key, []).append(rep)

    for check in checks:
        if check == "3.6":
            for k in k_list:
                for u, fid in zip(states, ids):
                    put(check, hz.check_energy_identity(u, k, fid))
        elif check in ("3.7", "3.9"):
            for k in k_list:
                reps = hz.check_high_frequency_inequality(states, k, ids)
                if check == "3.7":
                    put(check, reps["holder"])
                    put(check, reps["band_gradient"])
                else:
                    put(check, reps["x1_form"])
                    put(check, reps["bernstein"])
        elif check == "3.15":
            for s in s_values:
                reps = hz.check_accumulated_inequality(states, s, ids)
                put(check, reps["accumulated"])
                put(check, reps["chain"])
        elif check == "3.17":
            for s in s_values:
                for u, fid in zip(states, ids):
                    put(check, hz.check_superposition(u, s, fid))
        elif check == "linf":
            for k in k_list:
                if k < 1:
                    continue
                for u, fid in zip(states, ids):
                    put(check, hz.check_linf_chain(u, k, fid))
    return out


def _merge(reports: list[hz.InequalityReport]) -> list[hz.InequalityReport]:
    merged: dict[tuple, hz.InequalityReport] = {}
    for rep in reports:
        key = (rep.check, rep.kind)
        if key in merged:
            merged[key].merge(hz.InequalityReport(rep.check, rep.kind, rep.tol, list(rep.rows),
                                                  dict(rep.constants), dict(rep.notes)))
        else:
            merged[key] = hz.InequalityReport(rep.check, rep.kind, rep.tol, list(rep.rows),
                                              dict(rep.constants), dict(rep.notes))
    return list(merged.values())


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([repr(float(v)) if isinstance(v, (float, np.floating)) else v for v in row])


def cmd_harness(args) -> int:
    cfg = _load_config(args.config)
    checks = [c.strip() for c in args.checks.split(",") if c.strip()]
    unknown = sorted(set(checks) - set(CHECK_IDS))
    if unknown:
        raise UsageError(f"unknown checks {unknown}; choose from {','.join(CHECK_IDS)}")
    s_values = _float_list(args.s) if args.s else [0.5]
    resolved = {"config": cfg.to_dict(), "checks": checks, "s": s_values, "max_samples": args.max_samples}
    if args.dry_run:
        return _dry_run("harness", resolved)
    ctx = _Context(args, "harness", resolved, seed=cfg.seed)
    result = run(cfg, keep_states=True)
    states = _subsample(result.states, args.max_samples)
    ids = [f"t={u.time:.6g}" for u in states]
    summary = {"halted": result.halted, "message": result.message, "n_samples": len(states),
               "truncation_index": hz.grid_bandwidth(cfg.d, cfg.N), "checks": {},
               "preamble": ("Rates are evaluated with the exact Galerkin identity for the discretized "
                            "dynamics; constants are measured on this grid only.")}
    for check, reports in run_checks(states, ids, checks, cfg.k_list, s_values).items():
        stem = "check_" + check.replace(".", "_")
        entries = []
        for rep in _merge(reports):
            header, rows = rep.csv_rows()
            name = f"{stem}_{rep.check}.csv"
            _write_csv(ctx.path(name), header, rows)
            entries.append({**rep.to_dict(), "residuals_csv": name})
        _write_json(ctx.path(f"{stem}.json"), {"check": check, "reports": entries})
        summary["checks"][check] = all(e["pass"] for e in entries)
    _write_json(ctx.path("harness_summary.json"), summary)
    ctx.finish()
    print(json.dumps(_jsonable(summary), indent=2, sort_keys=True))
    if result.halted:
        raise Halt(result.message)
    return 0


# --- sweep -------------------------------------------------------------------------------

def cmd_sweep(args) -> int:
    if args.config and args.preset:
        raise UsageError("give either --config or --preset, not both")
    if args.config:
        cfg = _load_config(args.config)
    else:
        preset = args.preset or "tg2d"
        if preset not in PRESET_CONFIGS:
            raise UsageError(f"unknown preset {preset!r}; choose from {sorted(PRESET_CONFIGS)}")
        cfg = SolverConfig.from_dict(dict(PRESET_CONFIGS[preset]))
    nus = _float_list(args.nu)
    if not nus:
        raise UsageError("--nu needs at least one value")
    if any(n < 0 for n in nus):
        raise UsageError("viscosities must be >= 0")
    s_values = _float_list(args.s) if args.s else list(cfg.s_list)
    jobs = 1 if args.deterministic else max(1, args.jobs)
    resolved = {"config": cfg.to_dict(), "nu": nus, "s": s_values}
    if args.dry_run:
        return _dry_run("sweep", {**resolved, "jobs": jobs})
    ctx = _Context(args, "sweep", resolved, seed=cfg.seed)
    report = hz.nu_sweep(cfg, nus, s_values, jobs=jobs)
    data = report.to_dict()
    _write_json(ctx.path("sweep_report.json"), data)
    ctx.finish()
    print(json.dumps(_jsonable(data), indent=2, sort_keys=True))
    return 0


# --- report render ------------------------------------------------------------------------

def _flatten(obj, prefix=""):
    if isinstance(obj, dict):
        for key in sorted(obj):
            yield from _flatten(obj[key], f"{prefix}.{key}" if prefix else str(key))
    elif isinstance(obj, list) and obj and all(isinstance(v, (dict, list)) for v in obj):
        for i, v in enumerate(obj):
            yield from _flatten(v, f"{prefix}[{i}]")
    else:
        yield prefix, obj


def _fmt(value) -> str:
    if isinstance(value, float):
        return f"{value:.10g}"
    if isinstance(value, list):
        return "[" + ", ".join(_fmt(v) for v in value) + "]"
    return json.dumps(value) if value is None or isinstance(value, bool) else str(value)


def render_report(data) -> str:
    rows = list(_flatten(data))
    width = max((len(k) for k, _ in rows), default=0)
    return "\n".join(f"{k.ljust(width)}  {_fmt(v)}" for k, v in rows) + "\n"


def cmd_report_render(args) -> int:
    resolved = {"report": str(args.report), "output": args.output}
    if args.dry_run:
        return _dry_run("report render", resolved)
    try:
        data = json.loads(Path(args.report).read_text())
    except FileNotFoundError as exc:
        raise UsageError(f"report not found: {args.report}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"malformed report {args.report}: {exc}") from exc
    text = render_report(data)
    if args.output:
        try:
            Path(args.output).write_text(text)
        except OSError as exc:
            raise UsageError(f"cannot write {args.output}: {exc}") from exc
    else:
        sys.stdout.write(text)
    return 0


# --- parser and dispatch ------------------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--out", help=f"output root (default ${OUT_ENV} or ./supercrit-out)")
    common.add_argument("--dry-run", action="store_true", help="print the resolved configuration and exit")
    common.add_argument("--deterministic", action="store_true",
                        help="single worker and no wall-clock fields, so reruns are byte-identical")

    parser = _Parser(prog="supercrit", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"supercrit {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    w = sub.add_parser("weights", help="weight sequence checks")
    wsub = w.add_subparsers(dest="action", parser_class=_Parser)
    wsub.required = True
    wv = wsub.add_parser("verify", parents=[common], help="exhaustive bound scans")
    wv.add_argument("--max-j", type=int, default=1_000_000)
    wv.add_argument("--max-n", type=int, default=1_000_000)
    wv.add_argument("--tol", type=float, default=1e-10)
    wv.set_defaults(func=cmd_weights_verify)

    n = sub.add_parser("norms", help="norm computations")
    nsub = n.add_subparsers(dest="action", parser_class=_Parser)
    nsub.required = True
    ns = nsub.add_parser("selftest", parents=[common], help="consistency checks on random fields")
    ns.add_argument("--seed", type=int, default=0)
    ns.set_defaults(func=cmd_norms_selftest)

    sim = sub.add_parser("simulate", parents=[common], help="run the solver from a JSON config")
    sim.add_argument("--config", required=True)
    sim.set_defaults(func=cmd_simulate)

    h = sub.add_parser("harness", parents=[common], help="estimate checks on solver states")
    h.add_argument("--config", required=True)
    h.add_argument("--checks", default=",".join(CHECK_IDS))
    h.add_argument("--s", default=None, help="comma-separated exponents for the summed checks")
    h.add_argument("--max-samples", type=int, default=6, help="states sampled from the trace (0 = all)")
    h.set_defaults(func=cmd_harness)

    s = sub.add_parser("sweep", parents=[common], help="viscosity sweep from identical data")
    s.add_argument("--config")
    s.add_argument("--preset", choices=sorted(PRESET_CONFIGS))
    s.add_argument("--nu", required=True, help="comma-separated viscosities")
    s.add_argument("--s", default=None, help="comma-separated Sobolev exponents")
    s.add_argument("--jobs", type=int, default=1)
    s.set_defaults(func=cmd_sweep)

    r = sub.add_parser("report", help="report utilities")
    rsub = r.add_subparsers(dest="action", parser_class=_Parser)
    rsub.required = True
    rr = rsub.add_parser("render", parents=[common], help="tabulate a JSON report as plain text")
    rr.add_argument("report")
    rr.add_argument("--output")
    rr.set_defaults(func=cmd_report_render)
    return parser


def _error(code: int, kind: str, message: str) -> int:
    print(json.dumps({"error": {"exit_status": code, "kind": kind, "message": message}}), file=sys.stderr)
    return code


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        return _error(1, "usage", str(exc))
    except ConfigError as exc:
        return _error(1, "config", str(exc))
    except Halt as exc:
        return _error(2, "halt", str(exc))
    except FloatingPointError as exc:
        return _error(2, "numerics", str(exc))


if __name__ == "__main__":
    sys.exit(main())
