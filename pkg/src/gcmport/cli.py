"""Command-line interface: ``gcmport {simulate,estimate,eigs,duplicate,fcm,backtest}``.

Parameters come from built-in defaults, then an optional YAML/JSON file
(``--config``), then command-line flags. Everything is validated before any
computation starts. Exit codes: 0 success, 2 invalid configuration, 3
numerical failure (outputs that could be produced are still written).
"""
from __future__ import annotations

import argparse
import logging
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np
import yaml

from . import experiments as ex
from . import io
from .datagen import CONVENTIONS, GroundTruth, StudentConfig, inject_duplicate, sample_student
from .errors import GcmError
from .metrics import eigenvalue_comparison, fcm_random_benchmark
from .pipelines import estimate, parse_method
from .portfolio import STRATEGIES
from .preprocess import standardize

log = logging.getLogger("gcmport")


class ConfigError(ValueError):
    pass


def _float(text):
    return float("inf") if str(text).strip().lower() in ("inf", "+inf", "infinity") else float(text)


def _floats(text):
    if isinstance(text, (list, tuple)):
        return [_float(v) for v in text]
    if isinstance(text, (int, float)):
        return [float(text)]
    return [_float(v) for v in str(text).split(",") if v.strip()]


def _strs(text):
    if isinstance(text, (list, tuple)):
        return [str(v) for v in text]
    return [v.strip() for v in str(text).split(",") if v.strip()]


# name -> (converter, default, help)
TRUTH_OPTS = {
    "n": (int, 100, "number of assets in the base universe"),
    "truth_csv": (str, None, "ground-truth correlation matrix CSV (overrides the factor model)"),
    "market_beta": (float, ex.DEFAULT_TRUTH["market_beta"], "market loading of the factor truth"),
    "n_sectors": (int, ex.DEFAULT_TRUTH["n_sectors"], "number of sector factors"),
    "sector_rho": (float, ex.DEFAULT_TRUTH["sector_rho"], "extra within-sector correlation"),
    "dispersion": (float, ex.DEFAULT_TRUTH["dispersion"], "relative spread of factor loadings"),
    "truth_seed": (int, ex.DEFAULT_TRUTH["truth_seed"], "seed of the loading dispersion"),
}

COMMANDS = {
    "simulate": {
        **TRUTH_OPTS,
        "t": (int, 500, "number of dates"),
        "nu": (_float, 3.0, "Student degrees of freedom (inf for Gaussian)"),
        "scale_convention": (str, "covariance_is_C", "covariance_is_C or shape_is_C"),
        "duplicate_rho": (float, None, "append a duplicate of asset 0 with this correlation"),
    },
    "estimate": {
        "panel": (str, None, "returns CSV (assets x dates)"),
        "methods": (_strs, ["pearson"], "comma-separated method tags"),
        "n_folds": (int, 10, "ICVC folds"),
        "eta": (float, None, "RIE imaginary offset (default N^-1/2)"),
    },
    "eigs": {
        **TRUTH_OPTS,
        "q": (_floats, [0.5, 2.0], "aspect ratios N/T"),
        "nu": (_float, 3.0, "Student degrees of freedom"),
        "methods": (_strs, ["pearson", "clipped", "rie", "rie_gamma", "rie_id", "kendall", "tanh"],
                    "methods"),
        "seeds": (int, 1, "realizations averaged per q"),
    },
    "duplicate": {
        **TRUTH_OPTS,
        "q": (_floats, [0.5, 1.0, 2.0, 5.0, 10.0], "aspect ratios N/T"),
        "nu": (_float, 3.0, "Student degrees of freedom"),
        "rho_dup": (float, 0.99, "correlation of the duplicate pair"),
        "estimators": (_strs, ["pearson", "kendall", "gcc:tanh:1"], "correlation estimators"),
        "seeds": (int, 100, "realizations per q"),
    },
    "fcm": {
        **TRUTH_OPTS,
        "q": (_floats, [1.0], "aspect ratios N/T"),
        "nu": (_floats, [3.0], "Student degrees of freedom"),
        "mode_sides": (_strs, ["large", "small"], "large and/or small"),
        "estimators": (_strs, ["pearson", "kendall", "gcc:tanh:1"], "correlation estimators"),
        "seeds": (int, 20, "realizations per point"),
        "n_max": (int, None, "largest n of the FCM curve (default N)"),
        "random_draws": (int, 100, "random-basis draws of the benchmark"),
    },
    "backtest": {
        **TRUTH_OPTS,
        "q": (_floats, [1.0, 0.5], "in-sample aspect ratios N/T_in"),
        "nu": (_float, 3.0, "Student degrees of freedom"),
        "t_out": (int, 20, "out-of-sample window length"),
        "n_windows": (int, 40, "number of windows"),
        "methods": (_strs, ["kendall", "kendall_clipped", "kendall_icvc", "rie", "rie_gamma", "rie_id",
                            "clipped", "icvc"], "methods"),
        "strategies": (_strs, list(STRATEGIES), "strategies"),
        "seeds": (int, 5, "independent histories per q"),
        "n_folds": (int, 10, "ICVC folds"),
        "annualization_factor": (float, 252.0, "dates per year"),
    },
}

COMMON = {
    "seed": (int, 0, "master seed (unsigned 64-bit)"),
    "workers": (int, 1, "worker processes"),
    "out": (str, "out", "output directory"),
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gcmport", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, opts in COMMANDS.items():
        p = sub.add_parser(name)
        p.add_argument("--config", help="YAML or JSON parameter file")
        for key, (_, _, help_) in {**COMMON, **opts}.items():
            p.add_argument("--" + key.replace("_", "-"), dest=key, default=None, help=help_)
    return parser


def resolve(command: str, args: argparse.Namespace) -> dict:
    """Merge defaults, config file and flags; convert and validate."""
    spec = {**COMMON, **COMMANDS[command]}
    params = {k: v[1] for k, v in spec.items()}
    if args.config:
        try:
            loaded = yaml.safe_load(Path(args.config).read_text(encoding="utf-8")) or {}
        except (OSError, yaml.YAMLError) as exc:
            raise ConfigError(f"cannot read config {args.config}: {exc}") from exc
        if not isinstance(loaded, dict):
            raise ConfigError("config file must hold a mapping")
        loaded = loaded.get(command, loaded)
        unknown = sorted(set(loaded) - set(spec) - set(COMMANDS))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        params.update({k: v for k, v in loaded.items() if k in spec})
    for key in spec:
        value = getattr(args, key, None)
        if value is not None:
            params[key] = value
    for key, (conv, _, _) in spec.items():
        if params[key] is not None:
            try:
                params[key] = conv(params[key])
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"{key}: cannot parse {params[key]!r}") from exc
    validate(command, params)
    return params


def _require(cond: bool, message: str):
    if not cond:
        raise ConfigError(message)


def validate(command: str, p: dict) -> None:
    _require(0 <= p["seed"] < 2**64, "seed must be an unsigned 64-bit integer")
    _require(p["workers"] >= 1, "workers must be >= 1")
    if "n" in p:
        _require(p["n"] >= 2, "n must be >= 2 (N >= 2)")
        _require(0 <= p["dispersion"] < 1, "dispersion must lie in [0, 1)")
        _require(p["market_beta"] ** 2 + p["sector_rho"] <= 1, "market_beta^2 + sector_rho must be <= 1")
    nus = p.get("nu")
    for nu in (nus if isinstance(nus, list) else [nus] if nus is not None else []):
        _require(nu > 2, f"nu must be > 2 (covariance must exist), got {nu:g}")
    for q in p.get("q") or []:
        _require(q > 0, f"q must be > 0, got {q:g}")
    if command == "simulate":
        _require(p["t"] >= 2, "t must be >= 2 (T >= 2)")
        _require(p["scale_convention"] in CONVENTIONS, f"scale_convention must be one of {CONVENTIONS}")
        if p["duplicate_rho"] is not None:
            _require(0 < p["duplicate_rho"] < 1 - 1e-8, "duplicate_rho must lie in (0, 1)")
    if command == "estimate":
        _require(p["panel"] is not None, "estimate needs --panel")
        _require(p["n_folds"] >= 2, "n_folds must be >= 2")
        _require(p["eta"] is None or p["eta"] > 0, "eta must be > 0")
    for m in p.get("methods") or []:
        try:
            parse_method(m)
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc
    for e in p.get("estimators") or []:
        _require(parse_method(e)[1] == "raw", f"{e!r} is not a plain estimator")
    for s in p.get("strategies") or []:
        _require(s in STRATEGIES, f"unknown strategy {s!r}")
    for side in p.get("mode_sides") or []:
        _require(side in ("large", "small"), f"mode side must be large or small, got {side!r}")
    if command in ("eigs", "duplicate", "fcm", "backtest"):
        _require(p["seeds"] >= 1, "seeds must be >= 1")
    if command == "duplicate":
        _require(0 < p["rho_dup"] < 1 - 1e-8, "rho_dup must lie in (0, 1)")
    if command == "backtest":
        _require(p["t_out"] >= 1 and p["n_windows"] >= 1, "t_out and n_windows must be >= 1")
        for q in p["q"]:
            _require(ex.sample_count(p["n"], q) >= 2, f"q={q:g} leaves fewer than 2 in-sample dates")


def _truth(p: dict) -> GroundTruth:
    if p.get("truth_csv"):
        c, _ = io.read_matrix(p["truth_csv"])
        return GroundTruth.from_matrix(c)
    return ex.factor_truth(p["n"], p)


def _map(fn, tasks, workers: int):
    if workers <= 1 or len(tasks) <= 1:
        return [fn(*t) for t in tasks]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, *zip(*tasks)))


def _recorded(p: dict) -> dict:
    """Parameters that determine the results (output location and worker count do not)."""
    return {k: v for k, v in p.items() if k not in ("out", "workers")}


def _qtag(q: float) -> str:
    return f"{q:g}".replace(".", "p")


# -- commands ------------------------------------------------------------------

def cmd_simulate(p: dict, out: Path) -> int:
    truth = _truth(p)
    if p["duplicate_rho"] is not None:
        truth = inject_duplicate(truth, 0, p["duplicate_rho"])
    cfg = StudentConfig(nu=p["nu"], T=p["t"], seed=p["seed"], scale_convention=p["scale_convention"])
    panel = sample_student(truth, cfg)
    io.write_panel(out / "panel.csv", panel)
    io.write_matrix(out / "truth.csv", truth.C, panel.asset_ids)
    io.write_json(out / "panel.json", {
        "seed": p["seed"], "nu": p["nu"], "n_assets": panel.n_assets, "n_obs": panel.n_obs,
        "scale_convention": p["scale_convention"], "rng": "numpy Philox, SeedSequence(seed)",
        "truth_spectrum": truth.spectrum.eigenvalues, "params": _recorded(p),
    }, "simulate")
    return 0


def cmd_estimate(p: dict, out: Path) -> int:
    panel = io.read_panel(p["panel"])
    X = standardize(panel).X
    index, status = [], 0
    for m in p["methods"]:
        name = m.replace(":", "_").replace("+", "_")
        try:
            with warnings.catch_warnings(record=True) as caught:
                warnings.simplefilter("always")
                result = estimate(X, m, n_folds=p["n_folds"], eta=p["eta"])
            for w in caught:
                log.warning("%s: %s", m, w.message)
        except GcmError as exc:
            log.error("%s failed: %s", m, exc)
            index.append({"method": m, "error": type(exc).__name__, "message": str(exc)})
            status = 3
            continue
        io.write_matrix(out / f"corr_{name}.csv", result.values, panel.asset_ids)
        index.append({"method": m, "file": f"corr_{name}.csv", "scheme": result.scheme_tag,
                      "trace": result.trace, "eigenvalues": result.eigenvalues,
                      "warnings": [str(w.message) for w in caught]})
    io.write_json(out / "index.json", {"params": _recorded(p), "outputs": index}, "estimate")
    return status


def cmd_eigs(p: dict, out: Path) -> int:
    truth = _truth(p)
    tasks = [(truth.C, q, p["nu"], p["methods"], p["seed"], i * 100003 + r)
             for i, q in enumerate(p["q"]) for r in range(p["seeds"])]
    results = _map(ex.eigs_point, tasks, p["workers"])
    index, failures = [], []
    for i, q in enumerate(p["q"]):
        chunk = results[i * p["seeds"]:(i + 1) * p["seeds"]]
        cols = {}
        for m in p["methods"]:
            got = [r["eigenvalues"][m] for r in chunk if m in r["eigenvalues"]]
            if got:
                cols[m] = np.mean(got, axis=0)
        for r in chunk:
            failures += [{**f, "q": q} for f in r["failures"]]
        rows = eigenvalue_comparison(truth.spectrum, cols)
        name = f"eigs_q{_qtag(q)}.csv"
        io.write_table(out / name, rows, ["rank", "true", *cols])
        index.append({"q": q, "T": ex.sample_count(truth.n, q), "file": name, "methods": list(cols)})
    io.write_json(out / "index.json", {"params": _recorded(p), "points": index, "failures": failures}, "eigs")
    return 0


def cmd_duplicate(p: dict, out: Path) -> int:
    truth = _truth(p)
    tasks = [(truth.C, q, p["nu"], p["rho_dup"], p["estimators"], p["seed"], i * 100003 + r)
             for i, q in enumerate(p["q"]) for r in range(p["seeds"])]
    results = _map(ex.duplicate_point, tasks, p["workers"])
    rows, index = [], []
    for i, q in enumerate(p["q"]):
        chunk = results[i * p["seeds"]:(i + 1) * p["seeds"]]
        point = {"q": q, "T": ex.sample_count(truth.n, q), "values": {}}
        for e in p["estimators"]:
            vals = np.array([r[e] for r in chunk])
            point["values"][e] = vals
            rows.append({"q": q, "T": point["T"], "estimator": e, "mean": float(vals.mean()),
                         "std": float(vals.std(ddof=1)) if vals.size > 1 else 0.0, "n": int(vals.size)})
        name = f"duplicate_q{_qtag(q)}.json"
        io.write_json(out / name, point, "duplicate.point")
        index.append({"q": q, "file": name})
    io.write_table(out / "duplicate.csv", rows, ["q", "T", "estimator", "mean", "std", "n"])
    io.write_json(out / "index.json", {"params": _recorded(p), "points": index, "summary": "duplicate.csv"}, "duplicate")
    return 0


def cmd_fcm(p: dict, out: Path) -> int:
    truth = _truth(p)
    points = [(nu, q) for nu in p["nu"] for q in p["q"]]
    tasks = [(truth.C, q, nu, p["estimators"], p["mode_sides"], p["n_max"], p["seed"], i * 100003 + r)
             for i, (nu, q) in enumerate(points) for r in range(p["seeds"])]
    results = _map(ex.fcm_point, tasks, p["workers"])
    bench = fcm_random_benchmark(truth.n, p["random_draws"], seed=p["seed"], n_max=p["n_max"]).values
    index = []
    for i, (nu, q) in enumerate(points):
        chunk = results[i * p["seeds"]:(i + 1) * p["seeds"]]
        for side in p["mode_sides"]:
            means = {e: np.mean([r[(side, e)] for r in chunk], axis=0) for e in p["estimators"]}
            rows = [{"n": k + 1, "random": float(bench[k]), **{e: float(means[e][k]) for e in means}}
                    for k in range(bench.size)]
            name = f"fcm_nu{ex.nu_label(nu)}_q{_qtag(q)}_{side}.csv"
            io.write_table(out / name, rows, ["n", "random", *p["estimators"]])
            index.append({"nu": nu, "q": q, "mode_side": side, "file": name})
    io.write_json(out / "index.json", {"params": _recorded(p), "points": index}, "fcm")
    return 0


def cmd_backtest(p: dict, out: Path) -> int:
    truth = _truth(p)
    points = [(q, i * 100003 + r) for i, q in enumerate(p["q"]) for r in range(p["seeds"])]
    tasks = [(truth.C, q, p["nu"], p["t_out"], p["n_windows"], p["methods"], p["strategies"], p["seed"],
              rep, p["n_folds"], p["annualization_factor"]) for q, rep in points]
    reports = _map(ex.backtest_point, tasks, p["workers"])
    summary, index, status = [], [], 0
    for (q, rep), report in zip(points, reports):
        stem = f"backtest_q{_qtag(q)}_rep{rep}"
        io.write_json(out / f"{stem}.json", report.to_json(), "backtest.report")
        io.write_table(out / f"{stem}.csv", list(report.rows()),
                       ["window", "method", "strategy", "risk", "ann_vol"])
        for (s, m), st in sorted(report.summary().items()):
            summary.append({"q": q, "rep": rep, "strategy": s, "method": m, **st})
        index.append({"q": q, "rep": rep, "json": f"{stem}.json", "csv": f"{stem}.csv",
                      "n_failures": len(report.failures)})
        if report.failures:
            status = 3
    io.write_table(out / "summary.csv", summary,
                   ["q", "rep", "strategy", "method", "mean_risk", "mean_ann_vol", "std_ann_vol", "n_ok"])
    io.write_json(out / "index.json", {"params": _recorded(p), "points": index, "summary": "summary.csv"}, "backtest")
    return status


HANDLERS = {
    "simulate": cmd_simulate,
    "estimate": cmd_estimate,
    "eigs": cmd_eigs,
    "duplicate": cmd_duplicate,
    "fcm": cmd_fcm,
    "backtest": cmd_backtest,
}


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        params = resolve(args.command, args)
    except ConfigError as exc:
        print(f"gcmport {args.command}: invalid configuration: {exc}", file=sys.stderr)
        return 2
    out = Path(params["out"])
    out.mkdir(parents=True, exist_ok=True)
    try:
        return HANDLERS[args.command](params, out)
    except (GcmError, np.linalg.LinAlgError) as exc:
        print(f"gcmport {args.command}: numerical failure: {exc}", file=sys.stderr)
        return 3
    except (OSError, ValueError) as exc:
        print(f"gcmport {args.command}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
