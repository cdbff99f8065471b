"""Command line entry point.

    mtsomp simulate --config FILE [--seed N] [--threads N] [--output PATH] [--format csv|json]
    mtsomp screen --x X.csv --y Y.csv [--output PATH] [--format csv|json]
    mtsomp fit    --x X.csv --y Y.csv [--output PATH] [--format csv|json]

Config files are flat ``key = value`` text (``#`` starts a comment). Every
key can also be overridden on the command line with ``--set key=value``.
Variable and task indices in all output files are 1-based.

Exit codes: 0 success, 2 config error, 3 data error, 4 numerical failure.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import alasso, metrics, simgen
from .baselines import METHODS, run_pipeline
from .datamodel import CoefficientMatrix, MultiTaskDataset
from .somp import SompConfig, run_somp, select_by_bic

logger = logging.getLogger("mtsomp")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_NUMERIC = 0, 2, 3, 4

TABLE_COLUMNS = ["section", "method", "coverage_pct", "correct_zeros_pct",
                 "incorrect_zeros_pct", "exactly_fitted_pct", "support_size",
                 "estimation_error", "r2_test"]

# key -> (type, default)
CONFIG_KEYS = {
    "mode": (str, "simulate"),
    "scenario": (str, None),
    "n": (int, None),
    "p": (int, None),
    "s": (int, None),
    "T": (int, None),
    "t_nonzero": (int, None),
    "snr": (float, None),
    "sigma": (float, None),
    "rho": (float, None),
    "test_n": (int, None),
    "methods": (str, ",".join(METHODS)),
    "replicates": (int, 200),
    "threads": (str, "auto"),
    "output": (str, None),
    "format": (str, "csv"),
    "seed": (int, 0),
    "standardize": (bool, False),
    "bic_p_override": (int, None),
    "r2": (str, "standard"),
    "raw_output": (str, None),
}
# keys that never influence results and are left out of reports
_RUNTIME_KEYS = {"threads", "output", "format", "raw_output", "mode"}


class ConfigError(ValueError):
    pass


class DataError(ValueError):
    pass


def _parse_bool(v: str) -> bool:
    v = v.strip().lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise ConfigError(f"not a boolean: {v!r}")


def parse_config_text(text: str) -> dict:
    out = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value', got {line!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        out[key] = value
    return out


def build_config(raw: dict) -> dict:
    """Validate and type-convert raw string settings; fills defaults."""
    cfg = {}
    for key, value in raw.items():
        if key not in CONFIG_KEYS:
            raise ConfigError(f"unknown config key {key!r}")
        typ = CONFIG_KEYS[key][0]
        if value is None or value == "":
            cfg[key] = None
            continue
        try:
            cfg[key] = _parse_bool(value) if typ is bool else typ(value)
        except (ValueError, ConfigError) as err:
            raise ConfigError(f"bad value for {key}: {value!r} ({err})") from err
    for key, (_, default) in CONFIG_KEYS.items():
        cfg.setdefault(key, default)
    methods = [m.strip().upper() for m in cfg["methods"].split(",") if m.strip()]
    bad = [m for m in methods if m not in METHODS]
    if bad or not methods:
        raise ConfigError(f"methods: unrecognized {bad}; choose from {', '.join(METHODS)}")
    cfg["methods"] = methods
    if cfg["replicates"] < 1:
        raise ConfigError("replicates must be >= 1")
    if cfg["format"] not in ("csv", "json"):
        raise ConfigError("format must be csv or json")
    if cfg["r2"] not in ("standard", "normalized"):
        raise ConfigError("r2 must be 'standard' or 'normalized'")
    threads = cfg["threads"]
    if threads in (None, "auto"):
        cfg["threads"] = os.cpu_count() or 1
    else:
        try:
            cfg["threads"] = int(threads)
        except ValueError as err:
            raise ConfigError("threads must be a positive integer or 'auto'") from err
        if cfg["threads"] < 1:
            raise ConfigError("threads must be >= 1")
    return cfg


def simulation_spec(cfg: dict) -> simgen.SimulationSpec:
    if not cfg.get("scenario"):
        raise ConfigError("scenario is required in simulate mode")
    fields = dict(n=cfg["n"], p=cfg["p"], s=cfg["s"], T=cfg["T"], t_nonzero=cfg["t_nonzero"],
                  snr=cfg["snr"], sigma=cfg["sigma"], rho=cfg["rho"], seed=cfg["seed"],
                  test_n=cfg["test_n"])
    try:
        defaults = simgen.paper_spec(cfg["scenario"])
    except KeyError as err:
        raise ConfigError(f"unknown scenario {cfg['scenario']!r}") from err
    merged = {k: (getattr(defaults, k) if v is None and k in ("n", "p", "s", "T", "t_nonzero",
                                                               "snr", "sigma", "rho") else v)
              for k, v in fields.items()}
    try:
        return simgen.SimulationSpec(scenario=cfg["scenario"], **merged)
    except (ValueError, TypeError) as err:
        raise ConfigError(f"simulation settings: {err}") from err


def fmt_float(x: float) -> str:
    """Shortest round-trip representation."""
    if x is None or (isinstance(x, float) and np.isnan(x)):
        return ""
    return repr(float(x))


def fmt_pct(x: float) -> str:
    return f"{x:.1f}"


@dataclass
class SimulationResult:
    config: dict
    aggregates: list
    raw_rows: list = field(default_factory=list)
    diagnostics: alasso.AlassoDiagnostics = field(default_factory=alasso.AlassoDiagnostics)


def _run_replicate(spec, methods, bic_p, r2_kind, standardize):
    inst = simgen.generate(spec)
    train = inst.train.standardized() if standardize else inst.train
    r2 = metrics.r2_normalized if r2_kind == "normalized" else metrics.r2_test
    diag = alasso.AlassoDiagnostics()
    reports = {}
    for m in methods:
        B = run_pipeline(train, m, bic_p=bic_p, diagnostics=diag)
        reports[m] = metrics.replicate_report(inst.truth, B, inst.test, r2=r2)
    return reports, diag


def run_simulation(cfg: dict, progress=None) -> SimulationResult:
    """Generate replicates, run every method, aggregate per method."""
    spec = simulation_spec(cfg)
    methods = cfg["methods"]
    specs = [spec.with_replicate(r) for r in range(cfg["replicates"])]

    def job(sp):
        out = _run_replicate(sp, methods, cfg["bic_p_override"], cfg["r2"], cfg["standardize"])
        if progress is not None:
            progress(sp.replicate)
        return out

    if cfg["threads"] > 1:
        with ThreadPoolExecutor(max_workers=cfg["threads"]) as ex:
            results = list(ex.map(job, specs))
    else:
        results = [job(sp) for sp in specs]

    diag = alasso.AlassoDiagnostics()
    raw_rows = []
    for r, (reports, d) in enumerate(results):
        diag.fits += d.fits
        diag.max_kkt_ratio = max(diag.max_kkt_ratio, d.max_kkt_ratio)
        diag.no_convergence += d.no_convergence
        for m in methods:
            raw_rows.append({"replicate": r, "method": m, **metrics.flatten(reports[m])})
    aggregates = [metrics.aggregate([res[0][m] for res in results], m) for m in methods]
    return SimulationResult(cfg, aggregates, raw_rows, diag)


def report_config(cfg: dict) -> dict:
    return {k: cfg[k] for k in CONFIG_KEYS if k not in _RUNTIME_KEYS}


def table_rows(aggregates) -> list[dict]:
    rows = []
    for section in ("union", "exact"):
        for agg in aggregates:
            if section == "exact" and agg.method == "SOMP":
                continue
            v = agg.section(section)
            rows.append({
                "section": section,
                "method": agg.method,
                "coverage_pct": fmt_pct(v["covered"]),
                "correct_zeros_pct": fmt_pct(v["frac_correct_zeros"]),
                "incorrect_zeros_pct": fmt_pct(v["frac_incorrect_zeros"]),
                "exactly_fitted_pct": fmt_pct(v["exactly_fitted"]),
                "support_size": fmt_float(v["support_size"]),
                "estimation_error": fmt_float(v.get("estimation_error")),
                "r2_test": fmt_float(v.get("r2_test")),
            })
    return rows


def render_csv(rows: list[dict], columns: list[str]) -> str:
    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=columns, lineterminator="\n")
    w.writeheader()
    for row in rows:
        w.writerow(row)
    return buf.getvalue()


def render_simulation(result: SimulationResult, fmt: str) -> str:
    if fmt == "csv":
        return render_csv(table_rows(result.aggregates), TABLE_COLUMNS)
    methods = []
    for agg in result.aggregates:
        entry = {"name": agg.method, "replicates": agg.replicates}
        for section in ("union", "exact"):
            v = agg.section(section)
            sec = {"coverage_pct": v["covered"],
                   "correct_zeros_pct": v["frac_correct_zeros"],
                   "incorrect_zeros_pct": v["frac_incorrect_zeros"],
                   "exactly_fitted_pct": v["exactly_fitted"],
                   "support_size": v["support_size"]}
            if section == "exact":
                sec["estimation_error"] = v["estimation_error"]
                sec["r2_test"] = v["r2_test"]
            entry[section] = sec
        entry["sd"] = agg.sd
        methods.append(entry)
    doc = {"config": report_config(result.config), "methods": methods}
    return json.dumps(doc, indent=2, allow_nan=True) + "\n"


def render_raw(result: SimulationResult) -> str:
    if not result.raw_rows:
        return ""
    cols = list(result.raw_rows[0])
    rows = [{k: (fmt_float(v) if isinstance(v, float) else v) for k, v in row.items()}
            for row in result.raw_rows]
    return render_csv(rows, cols)


# ---------------------------------------------------------------- CSV data

def read_matrix(path: str) -> tuple[list[str], np.ndarray]:
    """Numeric CSV with one header row. Rows/columns in errors are 1-based
    data positions (the header is not counted)."""
    try:
        with open(path, newline="", encoding="utf-8") as fh:
            reader = csv.reader(fh)
            try:
                header = next(reader)
            except StopIteration:
                raise DataError(f"{path}: empty file") from None
            data = []
            for r, row in enumerate(reader, start=1):
                if not row:
                    continue
                if len(row) != len(header):
                    raise DataError(f"{path}: row {r} has {len(row)} cells, header has {len(header)}")
                vals = []
                for c, cell in enumerate(row, start=1):
                    try:
                        vals.append(float(cell))
                    except ValueError:
                        raise DataError(
                            f"{path}: non-numeric cell {cell!r} at row {r}, column {c}") from None
                data.append(vals)
    except OSError as err:
        raise DataError(f"cannot read {path}: {err}") from err
    if not data:
        raise DataError(f"{path}: no data rows")
    return header, np.array(data, dtype=float)


def load_dataset(x_path: str, y_path: str, standardize: bool = False) -> MultiTaskDataset:
    _, X = read_matrix(x_path)
    _, Y = read_matrix(y_path)
    if X.shape[0] != Y.shape[0]:
        raise DataError(f"X has {X.shape[0]} rows but Y has {Y.shape[0]}")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
        raise DataError("non-finite values in input")
    if standardize:
        mu, sd = X.mean(axis=0), X.std(axis=0)
        sd[sd == 0] = 1.0
        X = (X - mu) / sd
        Y = Y - Y.mean(axis=0)
    return MultiTaskDataset(X, Y, shared=True)


def write_matrix(path: str, M: np.ndarray, prefix: str):
    header = [f"{prefix}{j + 1}" for j in range(M.shape[1])]
    rows = [dict(zip(header, (fmt_float(v) for v in row))) for row in M]
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(render_csv(rows, header))


def screen_csv(x_path: str, y_path: str, cfg: dict) -> dict:
    ds = load_dataset(x_path, y_path, cfg.get("standardize", False))
    bic_p = cfg.get("bic_p_override") or ds.p
    path = run_somp(ds, SompConfig(bic_p=bic_p))
    s_hat, support = select_by_bic(path, ds.n, bic_p, ds.T)
    steps = [{"step": 0, "variable": None, "rss": path.rss_empty, "bic": path.bic_empty}]
    for k, st in enumerate(path.steps, start=1):
        steps.append({"step": k, "variable": st.selected_index + 1, "rss": st.rss_after,
                      "bic": st.bic_after})
    return {"n": ds.n, "p": ds.p, "T": ds.T, "s_hat": s_hat, "support": support.one_based(),
            "path": steps}


def render_screen(result: dict, fmt: str) -> str:
    if fmt == "json":
        return json.dumps(result, indent=2) + "\n"
    rows = [{"step": st["step"], "variable": "" if st["variable"] is None else st["variable"],
             "rss": fmt_float(st["rss"]), "bic": fmt_float(st["bic"]),
             "in_model": int(st["step"] <= result["s_hat"] and st["step"] > 0)}
            for st in result["path"]]
    return render_csv(rows, ["step", "variable", "rss", "bic", "in_model"])


def fit_csv(x_path: str, y_path: str, cfg: dict) -> dict:
    """S-OMP screening followed by per-task adaptive Lasso.

    Zero-variance response columns are reported as task errors and left out
    of screening; the remaining tasks are fitted normally.
    """
    ds = load_dataset(x_path, y_path, cfg.get("standardize", False))
    bic_p = cfg.get("bic_p_override") or ds.p
    Y = ds.responses
    good = [t for t in range(ds.T) if np.ptp(Y[:, t]) > 0]
    tasks = [{"task": t + 1, "support": [], "rss": None, "error": "zero-variance response"}
             for t in range(ds.T)]
    entries = {}
    if good:
        sub = ds.subset_tasks(good)
        path = run_somp(sub, SompConfig(bic_p=bic_p))
        _, screened = select_by_bic(path, sub.n, bic_p, sub.T)
        for i, t in enumerate(good):
            info = tasks[t]
            info["error"] = None
            if not screened:
                info["rss"] = float(Y[:, t] @ Y[:, t])
                continue
            try:
                fit = alasso.fit_task(sub, i, screened, bic_p=bic_p)
            except (alasso.NoConvergence, alasso.DegenerateDesign) as err:
                info["error"] = str(err)
                continue
            info["rss"] = fit.rss
            info["support"] = sorted(j + 1 for j in fit.support())
            for j, v in zip(fit.screened, fit.coefficients):
                if v != 0.0:
                    entries[(j, t)] = float(v)
    B = CoefficientMatrix(ds.p, ds.T, entries)
    return {"n": ds.n, "p": ds.p, "T": ds.T,
            "coefficients": [[j + 1, t + 1, v] for j, t, v in B.triples()],
            "tasks": tasks}


def render_fit(result: dict, fmt: str) -> tuple[str, str]:
    """Returns (coefficients document, per-task summary document)."""
    if fmt == "json":
        return json.dumps(result, indent=2) + "\n", ""
    coef = render_csv([{"variable": j, "task": t, "value": fmt_float(v)}
                       for j, t, v in result["coefficients"]], ["variable", "task", "value"])
    summary = render_csv([{"task": d["task"], "support": " ".join(map(str, d["support"])),
                           "rss": fmt_float(d["rss"]), "error": d["error"] or ""}
                          for d in result["tasks"]], ["task", "support", "rss", "error"])
    return coef, summary


def parse_triples(text: str) -> list[tuple[int, int, float]]:
    rows = csv.DictReader(io.StringIO(text))
    return [(int(r["variable"]), int(r["task"]), float(r["value"])) for r in rows]


# ---------------------------------------------------------------- entry

def _write(path: Optional[str], text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
    else:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)


def simulate_to_files(cfg: dict) -> SimulationResult:
    """Run a simulation study and write the report (and raw dump) it asks for."""
    result = run_simulation(cfg, progress=lambda r: logger.info("replicate %d done", r))
    _write(cfg["output"], render_simulation(result, cfg["format"]))
    if cfg["raw_output"]:
        _write(cfg["raw_output"], render_raw(result))
    d = result.diagnostics
    logger.info("alasso fits: %d, max KKT ratio %.3g, non-converged %d",
                d.fits, d.max_kkt_ratio, d.no_convergence)
    return result


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="mtsomp", description=__doc__.split("\n\n")[0])
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="flat key = value config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="override a config key (repeatable)")
        p.add_argument("--output", "-o")
        p.add_argument("--format", choices=["csv", "json"])
        p.add_argument("--seed", type=int)
        p.add_argument("--threads")
        p.add_argument("--standardize", action="store_true", default=None)
        p.add_argument("--bic-p", type=int, dest="bic_p_override")

    sim = sub.add_parser("simulate", help="run a Monte Carlo simulation study")
    common(sim)
    sim.add_argument("--raw", dest="raw_output", help="dump per-replicate metrics to this CSV")
    for name in ("screen", "fit"):
        p = sub.add_parser(name, help=f"{name} a CSV dataset")
        common(p)
        p.add_argument("--x", required=True)
        p.add_argument("--y", required=True)
    return ap


def load_cli_config(args) -> dict:
    raw = {}
    if args.config:
        try:
            with open(args.config, encoding="utf-8") as fh:
                raw.update(parse_config_text(fh.read()))
        except OSError as err:
            raise ConfigError(f"cannot read config {args.config}: {err}") from err
    for item in args.set:
        if "=" not in item:
            raise ConfigError(f"--set expects KEY=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        raw[k.strip()] = v.strip()
    for key in ("output", "format", "seed", "threads", "bic_p_override", "raw_output"):
        v = getattr(args, key, None)
        if v is not None:
            raw[key] = str(v)
    if getattr(args, "standardize", None):
        raw["standardize"] = "true"
    raw["mode"] = args.command
    return build_config(raw)


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(message)s")
    try:
        cfg = load_cli_config(args)
        if args.command == "simulate":
            simulate_to_files(cfg)
        elif args.command == "screen":
            _write(cfg["output"], render_screen(screen_csv(args.x, args.y, cfg), cfg["format"]))
        else:
            coef, summary = render_fit(fit_csv(args.x, args.y, cfg), cfg["format"])
            _write(cfg["output"], coef)
            if summary:
                if cfg["output"] in (None, "-"):
                    sys.stdout.write("\n" + summary)
                else:
                    _write(cfg["output"] + ".tasks.csv", summary)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except (DataError, ValueError) as err:
        if isinstance(err, simgen.CovarianceNotPD):
            print(f"numerical failure: {err}", file=sys.stderr)
            return EXIT_NUMERIC
        print(f"data error: {err}", file=sys.stderr)
        return EXIT_DATA
    except (alasso.NoConvergence, alasso.TaskError, np.linalg.LinAlgError, ArithmeticError) as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
