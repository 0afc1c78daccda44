"""Command-line front end.

Subcommands cover the whole workflow: `fit` runs the excess-posterior
chain, `quantile` and `predict` turn a fitted chain into extreme-quantile
and predictive summaries, `scedasis` maps the covariate effect over a
grid, `test-covariate` runs the constant-tail test, and `simulate` drives
the Monte Carlo experiments from a declarative JSON config.

Artifacts are deterministic: the same (config, seed) writes byte-identical
files, every file embeds the resolved config and seed, and all floats are
serialized with full repr precision. Failures print a machine-readable
JSON object {code, message, context} on stderr and exit nonzero.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
import warnings

import numpy as np
from scipy import stats

from .conditional import (
    conditional_draws,
    conditional_predictive_cdf,
    conditional_quantile_draws,
)
from .excess import extract_excesses
from .mcmc import McmcConfig, sample_pot_posterior
from .posterior import (
    credible_interval,
    extreme_quantile_draws,
    predictive_cdf,
    predictive_quantile,
    summarize,
)
from .priors import PriorSpec
from .scedasis import UniformBase, dp_posterior, ks_covariate_test, scedasis_posterior
from .simlab import (
    ConditionalModel,
    MarginalModel,
    coverage_experiment,
    power_experiment,
    predictive_consistency_experiment,
    rmirse_experiment,
)

__all__ = ["CliError", "ingest_csv", "main"]


class CliError(Exception):
    """Failure with a stable machine-readable code and context payload."""

    def __init__(self, code: str, message: str, context: dict | None = None):
        super().__init__(message)
        self.code = code
        self.context = context or {}

    def payload(self) -> dict:
        return {"code": self.code, "message": str(self), "context": self.context}


def ingest_csv(path):
    """Read (y, X) from a headered CSV file.

    The header must contain a `y` column; covariates, when present, are
    columns `x1..xd` (contiguous numbering) with values in [0,1]. Other
    columns (dates, ids) are ignored. Rows with a missing y value are
    rejected and reported by line number in a warning; malformed numbers
    and out-of-range covariates abort with the offending line and column.
    """
    try:
        fh = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise CliError("input_not_found", f"cannot open input: {exc}", {"path": str(path)})
    with fh:
        reader = csv.reader(fh)
        try:
            header = [h.strip() for h in next(reader)]
        except StopIteration:
            raise CliError(
                "missing_header",
                "input is empty; a header row with a 'y' column is required",
                {"path": str(path)},
            )
        if "y" not in header:
            raise CliError(
                "missing_column",
                "header must contain a 'y' column",
                {"path": str(path), "header": header},
            )
        y_col = header.index("y")
        numbered = {}
        for j, name in enumerate(header):
            if len(name) > 1 and name[0] == "x" and name[1:].isdigit():
                numbered[int(name[1:])] = j
        d = len(numbered)
        if d and sorted(numbered) != list(range(1, d + 1)):
            raise CliError(
                "bad_covariate_columns",
                f"covariate columns must be named x1..x{d} without gaps",
                {"found": sorted(header[j] for j in numbered.values())},
            )
        x_cols = [numbered[i] for i in range(1, d + 1)]

        ys: list[float] = []
        rows_x: list[list[float]] = []
        rejected: list[int] = []
        for line_no, row in enumerate(reader, start=2):
            if not row or all(not cell.strip() for cell in row):
                continue
            raw_y = row[y_col].strip() if y_col < len(row) else ""
            if not raw_y:
                rejected.append(line_no)
                continue
            try:
                y_val = float(raw_y)
            except ValueError:
                raise CliError(
                    "malformed_number",
                    f"line {line_no}, column 'y': cannot parse {raw_y!r}",
                    {"line": line_no, "column": "y", "value": raw_y},
                )
            vec = []
            for i, j in enumerate(x_cols, start=1):
                raw_x = row[j].strip() if j < len(row) else ""
                try:
                    x_val = float(raw_x)
                except ValueError:
                    raise CliError(
                        "malformed_number",
                        f"line {line_no}, column 'x{i}': cannot parse {raw_x!r}",
                        {"line": line_no, "column": f"x{i}", "value": raw_x},
                    )
                if not 0.0 <= x_val <= 1.0:
                    raise CliError(
                        "covariate_out_of_range",
                        f"line {line_no}, column 'x{i}': {x_val} outside [0,1]",
                        {"line": line_no, "column": f"x{i}", "value": x_val},
                    )
                vec.append(x_val)
            ys.append(y_val)
            rows_x.append(vec)
        if rejected:
            shown = ", ".join(str(i) for i in rejected[:10])
            more = ", ..." if len(rejected) > 10 else ""
            warnings.warn(
                f"rejected {len(rejected)} row(s) with missing y (lines {shown}{more})",
                UserWarning,
                stacklevel=2,
            )
        if not ys:
            raise CliError("no_data", "no usable data rows after the header", {"path": str(path)})
        y = np.array(ys, dtype=float)
        X = np.array(rows_x, dtype=float) if d else None
        return y, X


# ---------------------------------------------------------------------------
# serialization helpers

def _write_json(path, payload: dict) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_csv(path, provenance: dict, columns, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write("# " + json.dumps(provenance, sort_keys=True) + "\n")
        writer = csv.writer(fh)
        writer.writerow(columns)
        for row in rows:
            writer.writerow([repr(v) if isinstance(v, float) else v for v in row])


def _provenance(args, seed: int) -> dict:
    cfg = {
        key: value
        for key, value in sorted(vars(args).items())
        if key != "command" and value is not None
    }
    cfg["seed"] = seed
    return {"command": args.command, "config": cfg, "seed": seed}


def _resolve_seed(args, required: bool) -> int:
    if args.seed is not None:
        return int(args.seed)
    if required:
        raise CliError(
            "seed_required",
            "simulate requires --seed so reports are reproducible",
            {"flag": "--seed"},
        )
    seed = int(np.random.SeedSequence().entropy % 2**32)
    print(f"note: no --seed given, using random seed {seed}", file=sys.stderr)
    return seed


def _summary_block(values: np.ndarray) -> dict:
    s = summarize(values)
    return {
        "mean": s.mean,
        "sd": s.sd,
        "median": float(s.quantile(0.5)),
        "q05": float(s.quantile(0.05)),
        "q95": float(s.quantile(0.95)),
    }


def _interval_block(values: np.ndarray, alpha: float) -> dict:
    out = {}
    for itype in ("asymmetric", "symmetric"):
        ci = credible_interval(values, 1.0 - alpha, type=itype)
        out[itype] = [ci.lower, ci.upper]
    return out


# ---------------------------------------------------------------------------
# shared fit pipeline

def _prior_from_args(args) -> PriorSpec:
    if args.gamma_range is not None:
        parts = args.gamma_range.split(",")
        if len(parts) != 2:
            raise CliError(
                "bad_flag",
                "--gamma-range must be 'lo,hi'",
                {"flag": "--gamma-range", "value": args.gamma_range},
            )
        try:
            lo, hi = float(parts[0]), float(parts[1])
        except ValueError:
            raise CliError(
                "bad_flag",
                "--gamma-range must contain two numbers",
                {"flag": "--gamma-range", "value": args.gamma_range},
            )
        return PriorSpec(args.prior, shape_support=(lo, hi))
    return PriorSpec(args.prior)


def _run_chain(args, seed: int):
    y, X = ingest_csv(args.input)
    data = extract_excesses(y, args.k, X=X)
    prior = _prior_from_args(args)
    config = McmcConfig(iterations=args.mcmc_iters, burn_in=args.burn_in, seed=seed)
    draws = sample_pot_posterior(data, prior, config)
    return data, draws, X


def _fit_payload(data, draws, prov: dict, alpha: float) -> dict:
    return {
        "provenance": prov,
        "data": {"n": data.n, "k": data.k, "threshold": data.threshold},
        "param_summary": {
            "gamma": _summary_block(draws.gamma),
            "sigma": _summary_block(draws.sigma),
        },
        "intervals": {
            "gamma": _interval_block(draws.gamma, alpha),
            "sigma": _interval_block(draws.sigma, alpha),
        },
        "diagnostics": {
            "acceptance_rate": draws.acceptance_rate,
            "ess": [float(v) for v in np.atleast_1d(draws.ess)],
        },
    }


# ---------------------------------------------------------------------------
# commands

def _cmd_fit(args) -> int:
    seed = _resolve_seed(args, required=False)
    data, draws, _ = _run_chain(args, seed)
    prov = _provenance(args, seed)
    rows = zip(draws.gamma, draws.sigma, draws.log_post_trace)
    _write_csv(
        f"{args.output}.draws.csv",
        prov,
        ("gamma", "sigma", "log_post"),
        ([float(g), float(s), float(lp)] for g, s, lp in rows),
    )
    _write_json(f"{args.output}.json", _fit_payload(data, draws, prov, args.alpha))
    return 0


def _cmd_quantile(args) -> int:
    seed = _resolve_seed(args, required=False)
    data, draws, _ = _run_chain(args, seed)
    q_draws = extreme_quantile_draws(draws, data, args.p)
    payload = _fit_payload(data, draws, _provenance(args, seed), args.alpha)
    payload["extreme_quantile"] = {
        "p": args.p,
        "draws_summary": _summary_block(q_draws),
        "interval": _interval_block(q_draws, args.alpha),
    }
    _write_json(f"{args.output}.json", payload)
    return 0


def _parse_p_star(raw: str) -> list[float]:
    try:
        levels = [float(tok) for tok in raw.split(",") if tok.strip()]
    except ValueError:
        raise CliError(
            "bad_flag",
            "--p-star must be a comma-separated list of exceedance probabilities",
            {"value": raw},
        )
    if not levels or any(not 0.0 < v < 1.0 for v in levels):
        raise CliError(
            "bad_flag", "--p-star values must lie strictly in (0, 1)", {"value": raw}
        )
    return levels


def _cmd_predict(args) -> int:
    seed = _resolve_seed(args, required=False)
    levels = _parse_p_star(args.p_star)
    data, draws, _ = _run_chain(args, seed)
    pred = predictive_cdf(draws, data)
    payload = _fit_payload(data, draws, _provenance(args, seed), args.alpha)
    # p-star values are exceedance probabilities: the reported quantile is
    # exceeded by a future observation with probability p-star
    payload["predictive"] = {
        "quantiles": {repr(v): predictive_quantile(pred, v) for v in levels},
        "interval": [
            predictive_quantile(pred, 1.0 - args.alpha / 2.0),
            predictive_quantile(pred, args.alpha / 2.0),
        ],
        "level": 1.0 - args.alpha,
    }
    _write_json(f"{args.output}.json", payload)
    return 0


def _parse_x_grid(raw: str) -> np.ndarray:
    toks = [tok for tok in raw.split(",") if tok.strip()]
    try:
        if len(toks) == 1 and "." not in toks[0]:
            count = int(toks[0])
            if count < 2:
                raise CliError("bad_flag", "--x-grid count must be >= 2", {"value": raw})
            return np.linspace(0.0, 1.0, count)
        vals = np.array([float(tok) for tok in toks], dtype=float)
    except ValueError:
        raise CliError(
            "bad_flag",
            "--x-grid must be a point count or comma-separated values",
            {"value": raw},
        )
    if np.any(vals < 0.0) or np.any(vals > 1.0):
        raise CliError("bad_flag", "--x-grid values must lie in [0,1]", {"value": raw})
    return vals


def _c_interval(sced, alpha: float) -> list[float]:
    if sced.beta_b == 0.0:
        return [1.0 / sced.p_hat, 1.0 / sced.p_hat]
    lo = float(stats.beta.ppf(alpha / 2.0, sced.beta_a, sced.beta_b)) / sced.p_hat
    hi = float(stats.beta.ppf(1.0 - alpha / 2.0, sced.beta_a, sced.beta_b)) / sced.p_hat
    return [lo, hi]


def _cmd_scedasis(args) -> int:
    seed = _resolve_seed(args, required=False)
    y, X = ingest_csv(args.input)
    if X is None:
        raise CliError(
            "missing_column", "scedasis needs covariate columns x1..xd", {"path": args.input}
        )
    if args.method == "kernel" and args.bw is None:
        raise CliError("bad_flag", "kernel method needs --bw", {"flag": "--bw"})
    if args.method == "knn" and args.K is None:
        raise CliError("bad_flag", "knn method needs --K", {"flag": "--K"})
    if X.shape[1] != 1:
        raise CliError(
            "unsupported",
            "the x-grid sweep handles scalar covariates only",
            {"dimension": X.shape[1]},
        )
    data = extract_excesses(y, args.k, X=X)
    grid = _parse_x_grid(args.x_grid)
    dp = dp_posterior(args.tau_mass, UniformBase(X.shape[1]), data.concomitants)
    prov = _provenance(args, seed)

    with_quantiles = args.p is not None
    if with_quantiles:
        prior = _prior_from_args(args)
        config = McmcConfig(iterations=args.mcmc_iters, burn_in=args.burn_in, seed=seed)
        draws = sample_pot_posterior(data, prior, config)
        pair_seeds = np.random.SeedSequence(seed).spawn(grid.size)

    rows = []
    entries = []
    for idx, gx in enumerate(grid):
        sced = scedasis_posterior(dp, gx, args.method, X, bw=args.bw, K=args.K)
        c_lo, c_hi = _c_interval(sced, args.alpha)
        rows.append([float(gx), sced.mean, sced.sd, c_lo, c_hi])
        entry = {
            "x": float(gx),
            "c_summary": {
                "mean": sced.mean,
                "sd": sced.sd,
                "interval": [c_lo, c_hi],
                "ball_radius": sced.ball_radius,
            },
        }
        if with_quantiles:
            cd = conditional_draws(draws, sced, data, seed=pair_seeds[idx])
            q_draws = conditional_quantile_draws(cd, args.p)
            pred = conditional_predictive_cdf(cd)
            entry["conditional_quantile"] = {
                "p": args.p,
                "draws_summary": _summary_block(q_draws),
                "interval": _interval_block(q_draws, args.alpha),
            }
            entry["predictive_interval"] = [
                predictive_quantile(pred, 1.0 - args.alpha / 2.0),
                predictive_quantile(pred, args.alpha / 2.0),
            ]
        entries.append(entry)

    _write_csv(
        f"{args.output}.csv", prov, ("x", "c_mean", "c_sd", "c_lo", "c_hi"), rows
    )
    _write_json(f"{args.output}.json", {"provenance": prov, "grid": entries})
    return 0


def _cmd_test_covariate(args) -> int:
    seed = _resolve_seed(args, required=False)
    y, X = ingest_csv(args.input)
    if X is None:
        raise CliError(
            "missing_column",
            "test-covariate needs covariate columns x1..xd",
            {"path": args.input},
        )
    data = extract_excesses(y, args.k, X=X)
    report = ks_covariate_test(
        data, X, tau_total=args.tau_mass, M=args.M, alpha=args.alpha, seed=seed
    )
    payload = {
        "provenance": _provenance(args, seed),
        "statistic": report.statistic,
        "critical_value": report.critical_value,
        "reject": report.reject,
        "alpha": report.alpha,
        "n_draws": report.n_draws,
        "n": report.n,
        "k": report.k,
        "tau_total": report.tau_total,
    }
    _write_json(f"{args.output}.json", payload)
    return 0


def _simulate_report(cfg: dict, seed: int):
    kind = cfg.get("experiment")
    if kind == "coverage":
        model = MarginalModel(cfg["family"], tuple(cfg.get("params", ())))
        mcmc = None
        if "mcmc_iters" in cfg or "burn_in" in cfg:
            mcmc = McmcConfig(
                iterations=int(cfg.get("mcmc_iters", 12000)),
                burn_in=int(cfg.get("burn_in", 3000)),
            )
        return coverage_experiment(
            model,
            int(cfg["n"]),
            int(cfg["k"]),
            float(cfg["p"]),
            PriorSpec(cfg.get("prior", "flat")),
            int(cfg["replications"]),
            seed=seed,
            mcmc=mcmc,
            alpha=float(cfg.get("alpha", 0.05)),
        )
    if kind == "power":
        model = ConditionalModel(
            cfg.get("scedasis", "straight_line"),
            beta=0.0,
            covariate_law=cfg.get("covariate_law", "uniform"),
        )
        return power_experiment(
            model,
            cfg["beta_grid"],
            int(cfg["n"]),
            int(cfg["k"]),
            float(cfg.get("tau_total", 5.0)),
            int(cfg.get("M", 1000)),
            int(cfg["replications"]),
            seed=seed,
            alpha=float(cfg.get("alpha", 0.05)),
        )
    if kind == "rmirse":
        model = ConditionalModel(
            cfg.get("scedasis", "straight_line"),
            beta=float(cfg.get("beta", 1.0)),
            covariate_law=cfg.get("covariate_law", "uniform"),
        )
        return rmirse_experiment(
            model,
            int(cfg["n"]),
            int(cfg["k"]),
            int(cfg["replications"]),
            seed=seed,
            tau_total=float(cfg.get("tau_total", 5.0)),
            bw=float(cfg.get("bw", 0.1)),
            K=int(cfg["K"]) if "K" in cfg else None,
            grid_size=int(cfg.get("grid_size", 100)),
        )
    if kind == "predictive_consistency":
        return predictive_consistency_experiment(
            cfg["grid"],
            int(cfg["replications"]),
            seed=seed,
            conditional=bool(cfg.get("conditional", False)),
            pareto_alpha=float(cfg.get("pareto_alpha", 2.0)),
            x_point=float(cfg.get("x_point", 0.5)),
            beta=float(cfg.get("beta", 1.0)),
            bw=float(cfg.get("bw", 0.1)),
            tau_total=float(cfg.get("tau_total", 5.0)),
        )
    raise CliError(
        "unknown_experiment",
        f"experiment must be one of coverage, power, rmirse, predictive_consistency; got {kind!r}",
        {"experiment": kind},
    )


def _cmd_simulate(args) -> int:
    seed = _resolve_seed(args, required=True)
    try:
        with open(args.input, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise CliError("input_not_found", f"cannot open config: {exc}", {"path": args.input})
    except json.JSONDecodeError as exc:
        raise CliError("bad_config", f"config is not valid JSON: {exc}", {"path": args.input})
    try:
        report = _simulate_report(cfg, seed)
    except KeyError as exc:
        raise CliError("bad_config", f"config is missing key {exc}", {"path": args.input})
    prov = _provenance(args, seed)
    prov["experiment_config"] = report.config
    _write_csv(f"{args.output}.csv", prov, report.columns, report.rows)
    _write_json(
        f"{args.output}.json",
        {
            "provenance": prov,
            "name": report.name,
            "columns": list(report.columns),
            "rows": [list(r) for r in report.rows],
            "summary": report.summary,
        },
    )
    return 0


_COMMANDS = {
    "fit": _cmd_fit,
    "quantile": _cmd_quantile,
    "predict": _cmd_predict,
    "scedasis": _cmd_scedasis,
    "test-covariate": _cmd_test_covariate,
    "simulate": _cmd_simulate,
}


def _add_fit_flags(sub, with_k: bool = True) -> None:
    sub.add_argument("--input", required=True, help="input CSV path")
    sub.add_argument("--output", required=True, help="output path prefix")
    if with_k:
        sub.add_argument("--k", type=int, required=True, help="number of top order statistics")
    sub.add_argument("--prior", default="flat", choices=["flat", "mdi", "jeffreys"])
    sub.add_argument(
        "--gamma-range", default=None, help="shape support 'lo,hi' (default (-0.5, inf))"
    )
    sub.add_argument("--mcmc-iters", type=int, default=25000)
    sub.add_argument("--burn-in", type=int, default=5000)
    sub.add_argument("--seed", type=int, default=None)
    sub.add_argument("--alpha", type=float, default=0.05, help="1 - credible level")


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bayespot",
        description="Bayesian peaks-over-threshold tail inference",
    )
    subs = parser.add_subparsers(dest="command", required=True)

    fit = subs.add_parser("fit", help="sample the excess posterior, write draws + summary")
    _add_fit_flags(fit)

    quant = subs.add_parser("quantile", help="extreme tail quantile at exceedance level p")
    _add_fit_flags(quant)
    quant.add_argument("--p", type=float, required=True, help="exceedance probability")

    pred = subs.add_parser("predict", help="posterior predictive quantiles")
    _add_fit_flags(pred)
    pred.add_argument(
        "--p-star",
        default="0.1,0.05,0.01",
        help="comma-separated exceedance probabilities for predictive quantiles",
    )

    sced = subs.add_parser("scedasis", help="covariate tail-scaling over an x grid")
    _add_fit_flags(sced)
    sced.add_argument("--method", default="kernel", choices=["kernel", "knn"])
    sced.add_argument("--bw", type=float, default=None, help="kernel ball radius")
    sced.add_argument("--K", type=int, default=None, help="neighbour count for knn balls")
    sced.add_argument("--tau-mass", type=float, default=5.0, help="DP prior total mass")
    sced.add_argument("--x-grid", default="21", help="point count or comma-separated x values")
    sced.add_argument(
        "--p", type=float, default=None, help="also report conditional quantiles at this p"
    )

    test = subs.add_parser("test-covariate", help="KS-type test of constant tail scaling")
    test.add_argument("--input", required=True)
    test.add_argument("--output", required=True)
    test.add_argument("--k", type=int, required=True)
    test.add_argument("--tau-mass", type=float, default=5.0)
    test.add_argument("--M", type=int, default=1000, help="bootstrap draw count")
    test.add_argument("--alpha", type=float, default=0.05)
    test.add_argument("--seed", type=int, default=None)

    sim = subs.add_parser("simulate", help="run a Monte Carlo experiment from a JSON config")
    sim.add_argument("--input", required=True, help="experiment config JSON")
    sim.add_argument("--output", required=True, help="output path prefix")
    sim.add_argument("--seed", type=int, default=None, help="required for simulate")

    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    try:
        return _COMMANDS[args.command](args)
    except CliError as exc:
        print(json.dumps(exc.payload(), sort_keys=True), file=sys.stderr)
        return 1
    except ValueError as exc:
        err = CliError("computation_error", str(exc), {"command": args.command})
        print(json.dumps(err.payload(), sort_keys=True), file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
