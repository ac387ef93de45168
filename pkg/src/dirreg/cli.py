"""Command line: ``dirreg fit | simulate | summarize | plot``.

Exit codes for ``fit``: 0 success, 2 when the sampler diagnostics fail
(some split R-hat above 1.05), 1 on any error. Errors are also recorded with
their code in ``fit.json``.
"""
import argparse
import csv
import logging
import math
import os
import sys
from dataclasses import asdict, dataclass, field

import numpy as np

from . import __version__
from ._backend import BACKEND
from .errors import ConfigError, DirRegError, MissingArtifacts
from .hmc import SamplerConfig, run_chains
from .io import (
    DRAWS_CSV,
    EXPECTED_CSV,
    FIT_JSON,
    SCHEMA_VERSION,
    SUMMARY_CSV,
    SUMMARY_HEADER,
    covariate_settings,
    ingest_csv,
    read_draws,
    read_json,
    summary_rows,
    write_csv,
    write_draws,
    write_json,
)
from .likelihood import EvalContext
from .ml import fit_ml, wald_intervals
from .model import DesignMatrix, ModelSpec, build_design_matrix, free_names, parse_formula
from .plot import Panel, panel_filename, write_panel
from .posterior import credible_interval, expected_values_per_draw, summarize_fit

log = logging.getLogger("dirreg")

RHAT_FAIL = 1.05
EXIT_OK, EXIT_ERROR, EXIT_DIAGNOSTICS = 0, 1, 2
METHODS = ("ml", "bayes", "both")
EXPECTED_HEADER = ["panel", "setting", "component", "mean", "lower", "upper", "level"]


@dataclass
class RunConfig:
    input: str
    formula: str
    response: list = None
    reference: str = None
    method: str = "both"
    prior_sd_beta: float = 5.0
    prior_sd_theta: float = 5.0
    chains: int = 4
    iterations: int = 2000
    warmup: int = 1000
    adapt_delta: float = 0.95
    max_treedepth: int = 20
    seed: int = 1
    out: str = "dirreg_out"
    level: float = 0.95
    write_draws: bool = True
    n_jobs: int = 1
    ml_starts: int = 1

    def validate(self):
        if self.method not in METHODS:
            raise ConfigError(f"method must be one of {METHODS}, got {self.method!r}")
        if not 0 < self.level < 1:
            raise ConfigError(f"level must be in (0, 1), got {self.level}")
        if not (self.prior_sd_beta > 0 and self.prior_sd_theta > 0):
            raise ConfigError("prior standard deviations must be positive")
        if self.ml_starts < 1:
            raise ConfigError("ml_starts must be >= 1")
        if self.method != "ml":
            try:
                self.sampler_config()
            except ValueError as exc:
                raise ConfigError(str(exc)) from None

    def sampler_config(self):
        return SamplerConfig(
            chains=self.chains, iterations=self.iterations, warmup=self.warmup,
            target_accept=self.adapt_delta, max_treedepth=self.max_treedepth,
            seed=self.seed, n_jobs=self.n_jobs)

    def echo(self):
        # the output directory is where fit.json lives, not part of the fit
        d = asdict(self)
        d.pop("out")
        d.pop("n_jobs")
        return d


def resolve_reference(ref, component_names):
    """0-based index from a 1-based position or a component name."""
    if ref is None or ref == "":
        return len(component_names) - 1
    ref = str(ref)
    if ref in component_names:
        return component_names.index(ref)
    try:
        k = int(ref)
    except ValueError:
        raise ConfigError(f"reference {ref!r} is neither a component name nor a position") from None
    if not 1 <= k <= len(component_names):
        raise ConfigError(f"reference position {k} out of range 1..{len(component_names)}")
    return k - 1


def _design_json(d):
    return {"terms": list(d.terms), "column_names": list(d.column_names),
            "encoding": {k: list(v) for k, v in d.encoding.items()}}


def _design_from_json(obj):
    return DesignMatrix(np.zeros((0, len(obj["column_names"]))), obj["column_names"],
                        obj["encoding"], tuple(obj["terms"]))


def _clear_artifacts(out):
    for name in (FIT_JSON, SUMMARY_CSV, DRAWS_CSV, EXPECTED_CSV):
        path = os.path.join(out, name)
        if os.path.isfile(path):
            os.remove(path)


def _ml_section(fit, names, level, settings, ctx):
    C = ctx.C
    try:
        intervals = wald_intervals(fit, level)
    except DirRegError:
        intervals = None
    panel = []
    if intervals is None:
        B, g = fit.coefficients.beta, fit.coefficients.gamma
        for c, comp in enumerate(fit.component_names):
            for j, col in enumerate(fit.x_names):
                panel.append((f"{comp}:{col}", None, float(B[c, j]), None))
        for j, col in enumerate(fit.z_names):
            panel.append((f"gamma:{col}", None, float(g[j]), None))
    else:
        panel = [(n, lo, est, hi) for n, lo, est, hi in intervals]
    ev = {}
    for label, x in settings.items():
        mu = expected_values_per_draw(fit.free[None, :], x, C, ctx.q, ctx.reference).values[0]
        ev[label] = mu
        for c, comp in enumerate(fit.component_names):
            panel.append((f"mu[{label}]:{comp}", None, float(mu[c]), None))
    section = {
        "converged": fit.converged,
        "iterations": fit.iterations,
        "log_likelihood": fit.log_likelihood_at_max,
        "gradient_max_norm": fit.gradient_max_norm,
        "hessian_condition": fit.hessian_condition,
        "diagnostic": fit.diagnostic,
        "beta": fit.coefficients.beta,
        "gamma": fit.coefficients.gamma,
        "estimates": dict(zip(names, fit.free)),
        "std_errors": dict(zip(names, fit.std_errors)),
    }
    return section, panel, ev


def _bayes_section(draws, diag, names, level, max_treedepth):
    rhat = dict(zip(names, diag.rhat))
    finite = [v for v in diag.rhat if math.isfinite(v)]
    return {
        "draws_per_chain": int(draws.S // len(draws.step_sizes)),
        "chain_seeds": draws.chain_seeds,
        "step_sizes": draws.step_sizes,
        "inverse_metric": draws.mass_diag,
        "divergences": draws.divergence_count,
        "treedepth_saturation": draws.treedepth_saturation_count,
        "max_treedepth": max_treedepth,
        "mean_accept_stat": float(np.mean(draws.accept_stat)),
        "rhat": rhat,
        "ess_bulk": dict(zip(names, diag.ess_bulk)),
        "max_rhat": max(finite) if finite else None,
        "min_ess_bulk": float(np.nanmin(diag.ess_bulk)) if np.any(np.isfinite(diag.ess_bulk)) else None,
        "posterior_mean": dict(zip(names, draws.draws.mean(axis=0))),
        "rhat_threshold": RHAT_FAIL,
        "diagnostics_ok": not any(v > RHAT_FAIL for v in finite),
    }


def _run(config, result):
    config.validate()
    formula = parse_formula(config.formula)
    covariates = list(dict.fromkeys(formula.mean_terms + formula.precision_terms))
    table, Y = ingest_csv(config.input, config.response, covariates, prefix=formula.response)
    rep = table.report
    log.info("ingested %d of %d rows (%d dropped); %d rows renormalized; %d zero entries replaced",
             rep.retained_rows, rep.input_rows, rep.dropped_rows, rep.normalized_rows,
             rep.zero_entries_replaced)
    result["data"] = rep.as_dict()

    X = build_design_matrix(formula.mean_terms, table.columns)
    Z = build_design_matrix(formula.precision_terms, table.columns)
    ref = resolve_reference(config.reference, Y.component_names)
    spec = ModelSpec(formula, ref, config.prior_sd_beta, config.prior_sd_theta)
    ctx = EvalContext(Y, X, Z, spec)
    names = free_names(Y.component_names, X.column_names, Z.column_names, ref)
    settings = covariate_settings(X, table.columns)
    result["model"] = {
        "formula": str(formula),
        "components": Y.component_names,
        "reference": Y.component_names[ref],
        "reference_index": ref,
        "mean_design": _design_json(X),
        "precision_design": _design_json(Z),
        "free_parameters": names,
        "settings": settings,
    }

    rows, ev_rows = [], []
    code = EXIT_OK
    if config.method in ("ml", "both"):
        fit = fit_ml(ctx, n_starts=config.ml_starts, seed=config.seed)
        section, panel, ev = _ml_section(fit, names, config.level, settings, ctx)
        result["ml"] = section
        rows += [("ml", n, lo, est, hi, config.level) for n, lo, est, hi in panel]
        for label, mu in ev.items():
            for c, comp in enumerate(Y.component_names):
                ev_rows.append(("ml", label, comp, float(mu[c]), None, None, config.level))

    if config.method in ("bayes", "both"):
        scfg = config.sampler_config()
        draws, diag = run_chains(ctx, scfg)
        result["bayes"] = _bayes_section(draws, diag, names, config.level, scfg.max_treedepth)
        summary = summarize_fit(draws, Y.component_names, X.column_names, Z.column_names,
                                ref, config.level, settings, panel="bayes")
        rows += summary_rows(summary)
        for r in summary.rows:
            if r.name.startswith("mu["):
                label, comp = r.name[3:].split("]:", 1)
                ev_rows.append(("bayes", label, comp, r.mean, r.q_low, r.q_high, config.level))
        if config.write_draws:
            write_draws(os.path.join(config.out, DRAWS_CSV), draws)
        if not result["bayes"]["diagnostics_ok"]:
            log.warning("split R-hat above %.2f for some parameters", RHAT_FAIL)
            code = EXIT_DIAGNOSTICS

    write_csv(os.path.join(config.out, SUMMARY_CSV), SUMMARY_HEADER, rows)
    write_csv(os.path.join(config.out, EXPECTED_CSV), EXPECTED_HEADER, ev_rows)
    result["status"] = "ok" if code == EXIT_OK else "diagnostics_failed"
    return code


def run(config):
    """Fit according to ``config`` and write the artifacts; returns the exit code."""
    os.makedirs(config.out, exist_ok=True)
    _clear_artifacts(config.out)
    result = {
        "schema_version": SCHEMA_VERSION,
        "version": __version__,
        "status": "error",
        "error": None,
        "seed": config.seed,
        "backend": BACKEND,
        "config": config.echo(),
    }
    try:
        code = _run(config, result)
    except Exception as exc:  # every failure must land in fit.json
        code_name = exc.code if isinstance(exc, DirRegError) else type(exc).__name__
        result["status"] = "error"
        result["error"] = {"code": code_name, "message": str(exc)}
        log.error("%s: %s", code_name, exc)
        code = EXIT_ERROR
    write_json(os.path.join(config.out, FIT_JSON), result)
    return code


def _load_fit(out):
    fit = read_json(os.path.join(out, FIT_JSON))
    if fit.get("status") == "error" or "model" not in fit:
        raise MissingArtifacts(f"{out} holds a failed run; nothing to summarize")
    return fit


def summarize_artifacts(out, level=None):
    """Recompute the Bayesian summary panel from ``draws.csv``."""
    fit = _load_fit(out)
    model = fit["model"]
    names, _, values = read_draws(os.path.join(out, DRAWS_CSV))
    if names != model["free_parameters"]:
        raise MissingArtifacts("draws.csv columns do not match fit.json")
    level = fit["config"]["level"] if level is None else level
    settings = {k: np.array(v, dtype=float) for k, v in model["settings"].items()}
    return summarize_fit(values, model["components"], model["mean_design"]["column_names"],
                         model["precision_design"]["column_names"], model["reference_index"],
                         level, settings, panel="bayes")


def plot_artifacts(out, by=None, level=None, style="fit", data=None):
    """Write one SVG panel per level of ``by``; returns the file paths."""
    fit = _load_fit(out)
    cfg, model = fit["config"], fit["model"]
    level = cfg["level"] if level is None else level
    if not 0 < level < 1:
        raise ConfigError(f"level must be in (0, 1), got {level}")
    X = _design_from_json(model["mean_design"])
    covariates = list(X.terms) + list(model["precision_design"]["terms"])
    if by:
        covariates.append(by)
    table, Y = ingest_csv(data or cfg["input"], fit["data"]["response_columns"], covariates)
    C = len(model["components"])
    q = len(model["precision_design"]["column_names"])
    ref = model["reference_index"]

    free = None
    if style == "fit":
        if "bayes" in fit and os.path.isfile(os.path.join(out, DRAWS_CSV)):
            free = read_draws(os.path.join(out, DRAWS_CSV))[2]
        elif "ml" in fit:
            free = np.array([fit["ml"]["estimates"][n] for n in model["free_parameters"]])[None, :]
        else:
            raise MissingArtifacts("no estimates to plot; rerun fit or use the data style")

    if by:
        labels = [str(v) for v in table.columns[by]]
        levels = sorted(set(labels), key=_level_key(table, by))
    else:
        labels = ["all"] * Y.n
        levels = ["all"]
    paths = []
    for lv in levels:
        rows = np.array([i for i, lab in enumerate(labels) if lab == lv])
        title = f"{by} = {lv} (n = {rows.size})" if by else f"all observations (n = {rows.size})"
        panel = Panel(title, model["components"], Y.values[rows])
        if free is not None:
            setting = {}
            if by and by in X.terms:
                setting[by] = float(lv) if by not in X.encoding else lv
            mu = expected_values_per_draw(free, X.row_for(setting), C, q, ref).values
            panel.expected = mu.mean(axis=0)
            if mu.shape[0] > 1:
                bounds = np.array([credible_interval(mu[:, c], level) for c in range(C)])
                panel.lower, panel.upper, panel.level = bounds[:, 0], bounds[:, 1], level
        path = os.path.join(out, panel_filename(style, by, lv))
        write_panel(path, panel)
        paths.append(path)
    return paths


def _level_key(table, by):
    if by in table.numeric:
        return lambda s: (float(s), s)
    return lambda s: s


def simulate_csv(path, n=30, components=4, seed=1, theta=68.0, missing=0):
    """Blood-shaped synthetic data: response columns plus a Disease factor.

    ``missing`` rows get an empty Disease value, like unclassified patients.
    """
    from .simulate import BLOOD_BETA, simulate_blood_like

    if components == 4:
        beta = BLOOD_BETA
    else:
        c = np.arange(components, dtype=float)
        beta = np.column_stack([0.5 * np.cos(c), -0.25 * np.sin(c + 1.0)])
        beta[-1] = 0.0
    data, Y, _, _ = simulate_blood_like(n, beta, [math.log(theta)], seed)
    names = Y.component_names
    rng = np.random.default_rng([seed, 1])
    blank = set(rng.choice(n, size=missing, replace=False).tolist()) if missing else set()
    with open(path, "w", encoding="utf-8", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(names + ["Disease"])
        for i in range(n):
            w.writerow([repr(float(Y.values[i, c])) for c in range(len(names))]
                       + ["" if i in blank else data["Disease"][i]])
    return path


def _csv_list(text):
    return [s.strip() for s in text.split(",") if s.strip()] if text else None


def build_parser():
    parser = argparse.ArgumentParser(prog="dirreg", description="Dirichlet regression")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-q", "--quiet", action="store_true", help="only print warnings")
    sub = parser.add_subparsers(dest="command", required=True)

    f = sub.add_parser("fit", aliases=["run"], help="fit a model to a CSV file")
    f.add_argument("input", help="CSV file with a header row")
    f.add_argument("--formula", required=True, help='e.g. "Smp ~ Disease | 1"')
    f.add_argument("--response", type=_csv_list,
                   help="comma-separated response columns (default: columns named "
                        "<response>..., else all numeric non-covariate columns)")
    f.add_argument("--reference", help="reference component: name or 1-based position (default: last)")
    f.add_argument("--method", choices=METHODS, default="both")
    f.add_argument("--prior-sd-beta", type=float, default=5.0)
    f.add_argument("--prior-sd-theta", type=float, default=5.0)
    f.add_argument("--chains", type=int, default=4)
    f.add_argument("--iter", type=int, default=2000, dest="iterations",
                   help="iterations per chain, warmup included")
    f.add_argument("--warmup", type=int, default=1000)
    f.add_argument("--adapt-delta", type=float, default=0.95)
    f.add_argument("--max-treedepth", type=int, default=20)
    f.add_argument("--seed", type=int, default=1)
    f.add_argument("--out", default="dirreg_out", help="output directory")
    f.add_argument("--level", type=float, default=0.95, help="interval level")
    f.add_argument("--no-draws", action="store_true", help="do not write draws.csv")
    f.add_argument("--jobs", type=int, default=1, help="worker processes for chains")
    f.add_argument("--ml-starts", type=int, default=1)

    s = sub.add_parser("simulate", help="write a blood-shaped synthetic CSV")
    s.add_argument("--n", type=int, default=30)
    s.add_argument("--components", type=int, default=4)
    s.add_argument("--theta", type=float, default=68.0)
    s.add_argument("--missing", type=int, default=0, help="rows with an empty Disease value")
    s.add_argument("--seed", type=int, default=1)
    s.add_argument("--out", required=True, help="output CSV path")

    m = sub.add_parser("summarize", help="recompute the Bayesian summary from draws.csv")
    m.add_argument("out", help="output directory of a fit")
    m.add_argument("--level", type=float)

    p = sub.add_parser("plot", help="SVG panels per covariate level")
    p.add_argument("out", help="output directory of a fit")
    p.add_argument("--by", help="group-by column")
    p.add_argument("--level", type=float, help="interval level (default: the fit's)")
    p.add_argument("--style", choices=("fit", "data"), default="fit")
    p.add_argument("--data", help="CSV to use instead of the one recorded in fit.json")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING if args.quiet else logging.INFO,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    if args.command in ("fit", "run"):
        config = RunConfig(
            input=args.input, formula=args.formula, response=args.response,
            reference=args.reference, method=args.method,
            prior_sd_beta=args.prior_sd_beta, prior_sd_theta=args.prior_sd_theta,
            chains=args.chains, iterations=args.iterations, warmup=args.warmup,
            adapt_delta=args.adapt_delta, max_treedepth=args.max_treedepth,
            seed=args.seed, out=args.out, level=args.level,
            write_draws=not args.no_draws, n_jobs=args.jobs, ml_starts=args.ml_starts)
        return run(config)
    try:
        if args.command == "simulate":
            simulate_csv(args.out, args.n, args.components, args.seed, args.theta, args.missing)
        elif args.command == "summarize":
            table = summarize_artifacts(args.out, args.level)
            w = csv.writer(sys.stdout, lineterminator="\n")
            w.writerow(SUMMARY_HEADER)
            for row in summary_rows(table):
                w.writerow([repr(v) if isinstance(v, float) else v for v in row])
        else:
            for path in plot_artifacts(args.out, args.by, args.level, args.style, args.data):
                log.info("wrote %s", path)
    except (DirRegError, OSError) as exc:
        log.error("%s: %s", getattr(exc, "code", type(exc).__name__), exc)
        return EXIT_ERROR
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
