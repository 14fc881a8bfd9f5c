"""Command line runner: qflux run | plot | cache-info."""
from __future__ import annotations

import argparse
import csv
import hashlib
import json
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path

import numpy as np

from . import campaigns
from .config import ConfigError, ExperimentConfig
from .spectral import EigenCache, decode_pairs
from .svgplot import heatmap, loglog

SCHEMA_VERSION = "qflux.report/1"
EXIT_OK, EXIT_CONTRACT, EXIT_CONFIG = 0, 1, 2


def artifact_version() -> str:
    h = hashlib.sha256()
    for p in sorted(Path(__file__).parent.glob("*.py")):
        h.update(p.name.encode())
        h.update(p.read_bytes())
    return h.hexdigest()[:16]


def jsonable(obj):
    """Plain JSON types only; non-finite floats become strings, complex numbers {re, im}."""
    if isinstance(obj, dict):
        return {str(k): jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return jsonable(obj.tolist())
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        f = float(obj)
        return f if math.isfinite(f) else repr(f)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": jsonable(obj.real), "im": jsonable(obj.imag)}
    if obj is None or isinstance(obj, str):
        return obj
    if hasattr(obj, "u") and hasattr(obj, "Eh"):
        return {"Eh": float(obj.Eh), "residual_norm": float(obj.residual_norm)}
    return repr(obj)


def dumps(obj) -> str:
    return json.dumps(jsonable(obj), sort_keys=True, indent=1) + "\n"


def task_list(cfg: ExperimentConfig) -> list:
    names = campaigns.CAMPAIGNS[cfg["run.campaign"]]
    chosen = cfg["run.tasks"]
    if chosen:
        bad = [t for t in chosen if t not in campaigns.TASKS]
        if bad:
            raise ConfigError(f"run.tasks: unknown task(s) {', '.join(bad)}")
        names = [t for t in chosen]
    return names


def task_kwargs(name: str, cfg: ExperimentConfig) -> dict:
    r = cfg.resolved()
    g, e, c = r["geometry"], r["ensemble"], r["cutoff"]
    sizes = e["sizes"] or [g["N"]] * len(e["radii"])
    cut_opts = {"delta_rule": c["delta_rule"], "psi_w": c["psi_width"], "profile_name": c["profile"]}
    kw = {}
    if name == "theorem1":
        kw = dict(radii=tuple(e["radii"]), Ns=tuple(sizes), eps_list=tuple(c["eps_list"]),
                  construction=e["construction"], count=e["count"], seed=e["seed"],
                  a_expr=r["symbol"]["a"] or None, c=r["surface"]["c"], cut_opts=cut_opts)
    elif name == "corollary":
        kw = dict(radii=tuple(e["radii"]), Ns=tuple(sizes), count=e["count"], seed=e["seed"],
                  eps_list=tuple(c["eps_list"]), c=r["surface"]["c"], cut_opts=cut_opts)
    elif name in ("fbi", "grauert"):
        kw = dict(seed=r["run"]["seed"])
    kw.update(cfg.task_overrides.get(name, {}))
    return kw


def _json_surface_rhs(cfg: ExperimentConfig):
    path = cfg["surface.json"]
    if not path:
        return None
    from .expr import parse_symbol
    from .geometry import SectionMeasure, cosphere_measure, free_hamiltonian, hypersurface_from_json, section_integral

    with open(path, encoding="utf-8") as fh:
        S = hypersurface_from_json(fh.read(), 2)
    H = free_hamiltonian(2)
    expr = cfg["symbol.a"] or "bump(xi2; 0.5, 0.25)"
    sym = parse_symbol(expr)
    return {conv: section_integral(S, SectionMeasure(H, S, conv), lambda x, xi: np.real(sym(x, xi)))
            / cosphere_measure(2) for conv in ("flux", "literal")}


def _run_task(name, kw):
    try:
        return campaigns.TASKS[name](**kw)
    except (ValueError, ArithmeticError, np.linalg.LinAlgError) as exc:
        return {"error": f"{type(exc).__name__}: {exc}",
                "checks": {"completed": {"value": 0.0, "tol": 1.0, "op": ">=", "pass": False, "hard": True}}}


def flatten_checks(tasks: dict) -> list:
    rows = []
    for t in sorted(tasks):
        for k, v in sorted(tasks[t].get("checks", {}).items()):
            rows.append({"task": t, "check": k, **v})
    return rows


def write_csv(path: Path, rows: list, fields: list):
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.DictWriter(fh, fieldnames=fields, extrasaction="ignore")
        w.writeheader()
        for r in rows:
            w.writerow({k: (json.dumps(jsonable(v)) if isinstance(v, (dict, list)) else jsonable(v))
                        for k, v in r.items()})


def make_plots(report: dict, out: Path) -> dict:
    """SVG files for the report; returns {'files': [...], 'notes': [...]}."""
    out.mkdir(parents=True, exist_ok=True)
    files, notes = [], []
    tasks = report.get("tasks", {})

    def emit(name, svg):
        p = out / name
        p.write_text(svg, encoding="utf-8")
        files.append(p)

    def num(v):
        return float(v) if not isinstance(v, str) else float(v)

    for t in ("theorem1", "corollary"):
        r = tasks.get(t)
        if not r or "per_h" not in r:
            continue
        rows = [p for p in r["per_h"] if p.get("members", 0) > 0]
        if not rows:
            notes.append(f"{t}: empty ensemble, plot skipped")
            continue
        rhs = r["rhs"]["flux"] if isinstance(r.get("rhs"), dict) else r["rhs"]
        hs = [p["h"] for p in rows]
        errs = [p["rel_err"]["flux"] if isinstance(p["rel_err"], dict) else p["rel_err"] for p in rows]
        bars = [num(p["lhs_stderr"]) / abs(rhs) if rhs and p["lhs_stderr"] not in ("nan",) else 0.0 for p in rows]
        slope = r.get("error_fit", {}).get("exponent")
        slope = num(slope) if slope is not None else None
        if not any(x > 0 for x in errs):
            notes.append(f"{t}: no positive errors, plot skipped")
            continue
        emit(f"{t}_convergence.svg", loglog(hs, errs, bars, slope, f"{t}: a = {r.get('symbol', '')}",
                                            "h", "relative error"))
    r = tasks.get("grauert")
    if r and "boundary_rows" in r:
        rows = r["boundary_rows"]
        emit("grauert_growth.svg", loglog([x["h"] for x in rows], [abs(x["lhs_boundary"]) for x in rows], None,
                                          num(r["growth"]["h_power"]), "boundary sum times exp(-1/h)", "h",
                                          "value"))
    r = tasks.get("fbi")
    if r and "anti_wick" in r:
        aw = r["anti_wick"]
        emit("fbi_anti_wick.svg", loglog(aw["h"], aw["errors"], None, num(aw["fit"]["exponent"]),
                                         "anti-Wick vs Weyl pairing", "h", "difference"))
        hm = r.get("husimi")
        if hm:
            emit("fbi_husimi.svg", heatmap(hm["x"], hm["xi"], hm["density"], f"Husimi density, h = {hm['h']}"))
    r = tasks.get("boundary_vanishing")
    if r and "max_abs_qf" in r:
        if any(v > 0 for v in r["max_abs_qf"]):
            emit("boundary_vanishing.svg", loglog(r["h"], r["max_abs_qf"], None, None, "slab boundary flux", "h",
                                                  "max |QF|"))
        else:
            notes.append("boundary_vanishing: all values exactly zero, plot skipped")
    return {"files": files, "notes": notes}


def _sha(path: Path) -> str:
    return hashlib.sha256(path.read_bytes()).hexdigest()


def _resolve_cache(arg):
    spec = arg if arg is not None else os.environ.get("QFLUX_CACHE")
    if spec is None or spec == "off":
        return None
    return EigenCache(Path(spec))


def cmd_run(args) -> int:
    try:
        cfg = ExperimentConfig.from_file(args.config)
        if args.seed is not None:
            if not 0 <= args.seed < 2**64:
                raise ConfigError("--seed: must be an unsigned 64-bit integer")
            cfg.set("run.seed", args.seed)
            cfg.set("ensemble.seed", args.seed)
        if args.threads < 1:
            raise ConfigError("--threads: must be at least 1")
        names = task_list(cfg)
        kwargs = {n: task_kwargs(n, cfg) for n in names}
        json_rhs = _json_surface_rhs(cfg) if "theorem1" in names else None
    except (ConfigError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out or cfg["run.out"])
    out.mkdir(parents=True, exist_ok=True)
    cache = _resolve_cache(args.cache)
    campaigns.set_cache(cache)
    try:
        with ThreadPoolExecutor(max_workers=args.threads) as pool:
            futs = {n: pool.submit(_run_task, n, kwargs[n]) for n in names}
            results = {n: futs[n].result() for n in sorted(futs)}
    finally:
        campaigns.set_cache(None)
    timings = {n: results[n].pop("elapsed_s", None) for n in sorted(results)}
    if json_rhs is not None and "theorem1" in results:
        results["theorem1"]["rhs_json_surface"] = json_rhs
    checks = flatten_checks(results)
    hard_ok = all(c["pass"] for c in checks if c["hard"])
    report = {"schema": SCHEMA_VERSION, "artifact_version": artifact_version(), "config": cfg.resolved(),
              "config_text": cfg.to_text(), "tasks": results, "checks": checks,
              "status": {"hard_pass": hard_ok, "all_pass": all(c["pass"] for c in checks)}}
    files = []
    rp = out / "report.json"
    rp.write_text(dumps(report), encoding="utf-8")
    files.append(rp)
    cp = out / "checks.csv"
    write_csv(cp, checks, ["task", "check", "value", "tol", "op", "pass", "hard"])
    files.append(cp)
    for t in ("theorem1", "corollary"):
        if t in results and "per_h" in results[t]:
            p = out / f"{t}_per_h.csv"
            write_csv(p, results[t]["per_h"], ["h", "N", "members", "lhs", "lhs_stderr", "rel_err"])
            files.append(p)
    if "grauert" in results and "boundary_rows" in results["grauert"]:
        p = out / "grauert_boundary.csv"
        write_csv(p, results["grauert"]["boundary_rows"], ["h", "lhs_boundary", "with_rho", "log_scaled"])
        files.append(p)
    plots = make_plots(json.loads(rp.read_text(encoding="utf-8")), out / "plots")
    files.extend(plots["files"])
    manifest = {"files": [{"path": str(p.relative_to(out)), "sha256": _sha(p)} for p in files],
                "timing_s": timings, "threads": args.threads, "plot_notes": plots["notes"],
                "cache": {"dir": str(cache.root) if cache else None, "hits": cache.hits if cache else 0,
                          "misses": cache.misses if cache else 0, "warnings": cache.warnings if cache else []}}
    (out / "manifest.json").write_text(dumps(manifest), encoding="utf-8")
    for c in checks:
        flag = "PASS" if c["pass"] else "FAIL"
        print(f"{flag} {c['task']}.{c['check']} value={c['value']:.6g} ({c['op']} {c['tol']})"
              f"{' [hard]' if c['hard'] else ''}")
    for w in manifest["cache"]["warnings"]:
        print(f"warning: {w}", file=sys.stderr)
    return EXIT_OK if hard_ok else EXIT_CONTRACT


def cmd_plot(args) -> int:
    try:
        report = json.loads(Path(args.report).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        print(f"cannot read report: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out) if args.out else Path(args.report).parent / "plots"
    res = make_plots(report, out)
    for f in res["files"]:
        print(f)
    for n in res["notes"]:
        print(f"note: {n}")
    return EXIT_OK


def cmd_cache_info(args) -> int:
    cache = _resolve_cache(args.cache)
    if cache is None:
        print("cache disabled")
        return EXIT_OK
    root = Path(cache.root)
    entries = sorted(root.glob("*.qflx")) if root.exists() else []
    print(f"cache {root}: {len(entries)} entries")
    for p in entries:
        try:
            g, pairs = decode_pairs(p.read_bytes())
            state = f"ok n={g.n} N={g.N} h={g.h:.6g} members={len(pairs)}"
        except ValueError as exc:
            state = f"corrupt ({exc})"
        print(f"{p.name} {p.stat().st_size} bytes {state}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qflux", description="Quantum flux verification campaigns")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run a campaign from a config file")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.add_argument("--threads", type=int, default=1)
    r.add_argument("--seed", type=int)
    r.add_argument("--cache", help="cache directory or 'off' (default: $QFLUX_CACHE, else off)")
    r.set_defaults(fn=cmd_run)
    p = sub.add_parser("plot", help="write SVG plots for a report")
    p.add_argument("report")
    p.add_argument("--out")
    p.set_defaults(fn=cmd_plot)
    c = sub.add_parser("cache-info", help="list cached eigenbases")
    c.add_argument("--cache")
    c.set_defaults(fn=cmd_cache_info)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
