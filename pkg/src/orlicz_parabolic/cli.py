"""Command-line interface.

Every subcommand takes a config file (positionally or via ``--config``).
Options may also be set through environment variables named
``ORLICZ_<OPTION>``, e.g. ``ORLICZ_OUT=results``.

Exit codes: 0 success, 1 configuration error, 2 numerical failure,
3 criterion failure.
"""
from __future__ import annotations

import csv
import io
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import click

from .config import Config, ConfigError, config_from_dict, parse_config
from .fields import write_binary, write_csv
from .harness import (
    ExperimentError,
    build_problem,
    run_experiment,
    summary_row,
    summary_table,
    write_summary_csv,
)
from .nfunction import estimate_growth_bounds, normalize, verify_lemma_p1
from .norms import compatibility_check
from .scaling import exponent_set
from .solver import NumericalError, solve

EXIT_CONFIG, EXIT_NUMERIC, EXIT_CRITERION = 1, 2, 3
ENV_PREFIX = "ORLICZ"
_NUMERIC_ERRORS = (NumericalError, ExperimentError, ArithmeticError, FloatingPointError)


def _fail(code: int, message: str):
    click.echo(message, err=True)
    sys.exit(code)


def _load(config_arg, config_opt, strict, seed) -> Config:
    path = config_arg or config_opt
    if path is None:
        _fail(EXIT_CONFIG, "error: no config given (positional argument or --config)")
    try:
        cfg = parse_config(path, strict=strict)
        if seed is not None and seed != cfg.seed:
            cfg = config_from_dict(dict(cfg.raw, seed=seed), strict=strict)
    except ConfigError as exc:
        _fail(EXIT_CONFIG, f"config error: {exc}")
    return cfg


def _out_dir(out, cfg: Config | None) -> Path:
    p = Path(out if out is not None else (cfg.output if cfg else "out"))
    p.mkdir(parents=True, exist_ok=True)
    return p


def common_options(fn):
    """``--config --out --seed --strict`` shared by all subcommands."""
    fn = click.option("--strict/--no-strict", default=True, show_default=True,
                      envvar=f"{ENV_PREFIX}_STRICT", help="Reject unknown config keys.")(fn)
    fn = click.option("--seed", type=int, default=None, envvar=f"{ENV_PREFIX}_SEED",
                      help="Override the config seed.")(fn)
    fn = click.option("--out", type=click.Path(file_okay=False), default=None,
                      envvar=f"{ENV_PREFIX}_OUT", help="Output directory (default: config 'output').")(fn)
    fn = click.option("--config", "config_opt", type=click.Path(), default=None,
                      envvar=f"{ENV_PREFIX}_CONFIG", help="Config file (alternative to the argument).")(fn)
    return fn


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
def main():
    """Intrinsic-scaling toolkit for degenerate parabolic equations with Orlicz growth."""


# exponents ----------------------------------------------------------------------


def _format_exponents(ex, comp) -> str:
    lines = [
        f"alpha={ex.alpha:.6f}",
        f"theta={ex.theta:.6f}",
        f"beta={ex.beta:.6f}",
    ]
    if ex.theta_rho is not None:
        lines.append(f"theta_rho={ex.theta_rho:.6f} (rho={ex.rho})")
    lines += [
        f"g0={ex.g0:g} g1={ex.g1:g} f0={ex.f0:g} f1={ex.f1:g} n={ex.n} r={ex.r:g}",
        f"compatibility: left={comp.left:.6f} right={comp.right:.6f} -> {comp.message()}",
    ]
    return "\n".join(lines)


@main.command()
@click.argument("config", required=False, type=click.Path())
@common_options
@click.option("--g0", type=float, default=None)
@click.option("--g1", type=float, default=None, help="Defaults to g0.")
@click.option("--f0", type=float, default=None)
@click.option("--f1", type=float, default=None, help="Defaults to f0.")
@click.option("--n", "dim", type=int, default=None)
@click.option("--r", type=float, default=None)
def exponents(config, config_opt, out, seed, strict, g0, g1, f0, f1, dim, r):
    """Print alpha, theta, beta and the compatibility report."""
    nf = None
    rho = None
    if config or config_opt:
        cfg = _load(config, config_opt, strict, seed)
        nf = cfg.nf if cfg.nf.normalized else normalize(cfg.nf)
        vals = dict(g0=cfg.nf.g0, g1=cfg.nf.g1, f0=cfg.F.g0, f1=cfg.F.g1, n=cfg.n, r=cfg.r)
        rho = cfg.experiment["rho"]
    else:
        if None in (g0, f0, dim, r):
            _fail(EXIT_CONFIG, "error: give a config or all of --g0 --f0 --n --r")
        vals = dict(g0=g0, g1=g0 if g1 is None else g1, f0=f0, f1=f0 if f1 is None else f1,
                    n=dim, r=r)
    if not vals["g0"] > 1 or not vals["r"] > 1 or vals["f0"] <= 0:
        _fail(EXIT_CONFIG, "error: need g0 > 1, f0 > 0 and r > 1")
    comp = compatibility_check(vals["g0"], vals["f0"], vals["n"], vals["r"])
    ex = exponent_set(**vals, nf=nf, rho=rho)
    click.echo(_format_exponents(ex, comp))


# check-nfunction ------------------------------------------------------------------


@main.command("check-nfunction")
@click.argument("config", required=False, type=click.Path())
@common_options
@click.option("--samples", type=int, default=10_000, show_default=True)
def check_nfunction(config, config_opt, out, seed, strict, samples):
    """Run the N-function inequality suite and growth-bound certification."""
    cfg = _load(config, config_opt, strict, seed)
    nf = cfg.nf
    try:
        rep = verify_lemma_p1(nf, sample_count=samples, seed=cfg.seed)
        bounds = estimate_growth_bounds(nf)
    except _NUMERIC_ERRORS + (ValueError,) as exc:
        _fail(EXIT_NUMERIC, f"numerical error: {exc}")
    certified = bounds.contains(nf.g0, nf.g1)
    click.echo(f"kind={nf.kind} g0={nf.g0:.6g} g1={nf.g1:.6g}")
    click.echo(f"estimated bounds: g0_hat={bounds.g0_hat:.6g} g1_hat={bounds.g1_hat:.6g} "
               f"-> {'certified' if certified else 'NOT certified'}")
    for key, count in sorted(rep.violations.items()):
        click.echo(f"  {key:10s} violations={count} worst_slack={rep.worst_slack[key]:.3e}")
    click.echo(f"total violations: {rep.total_violations}")
    if rep.total_violations or not certified:
        sys.exit(EXIT_CRITERION)


# solve ------------------------------------------------------------------------


@main.command("solve")
@click.argument("config", required=False, type=click.Path())
@common_options
@click.option("--format", "fmt", type=click.Choice(["binary", "csv"]), default="binary",
              show_default=True)
def solve_cmd(config, config_opt, out, seed, strict, fmt):
    """Solve the configured problem and write the trajectory."""
    cfg = _load(config, config_opt, strict, seed)
    try:
        setup = build_problem(cfg)
        u = solve(setup.problem, setup.opts, setup.cadence)
    except _NUMERIC_ERRORS as exc:
        _fail(EXIT_NUMERIC, f"numerical error: {exc}")
    d = _out_dir(out, cfg)
    path = d / (f"{cfg.name}.opfd" if fmt == "binary" else f"{cfg.name}_field.csv")
    (write_binary if fmt == "binary" else write_csv)(u, path)
    click.echo(f"wrote {path} ({u.slices} slices, N={u.N}, n={u.n})")


# oscillation / experiment ------------------------------------------------------------


def _run(cfg: Config):
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            return run_experiment(cfg)
    except _NUMERIC_ERRORS as exc:
        _fail(EXIT_NUMERIC, f"numerical error: {exc}")


PROFILE_COLUMNS = ("family", "k", "rho", "depth", "osc")


def profile_csv(report) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(PROFILE_COLUMNS)
    for prof in (report.profile, report.parabolic_profile):
        for k, (rk, dk, ok) in enumerate(zip(prof["rho"], prof["depth"], prof["osc"])):
            w.writerow([prof["family"], k, repr(rk), repr(dk), repr(ok)])
    return buf.getvalue()


@main.command()
@click.argument("config", required=False, type=click.Path())
@common_options
def oscillation(config, config_opt, out, seed, strict):
    """Write the oscillation profiles (intrinsic and parabolic) and the fit summary."""
    cfg = _load(config, config_opt, strict, seed)
    rep = _run(cfg)
    if rep.profile is None:
        _fail(EXIT_CRITERION, f"compatibility: {rep.message}")
    d = _out_dir(out, cfg)
    path = d / f"{cfg.name}_oscillation.csv"
    path.write_text(profile_csv(rep))
    fit = rep.alpha_fit
    click.echo(f"wrote {path}")
    click.echo(f"alpha_emp={fit['exponent']:.6f} prefactor={fit['prefactor']:.6g} "
               f"residual={fit['residual']:.3e} (cylinders={fit['used']})")
    click.echo(f"beta_emp={rep.beta_emp:.6f}")


def _write_report(rep, d: Path):
    (d / f"{rep.name}.json").write_text(rep.to_json())
    (d / f"{rep.name}.csv").write_text(write_summary_csv([rep]))


@main.command()
@click.argument("config", required=False, type=click.Path())
@common_options
def experiment(config, config_opt, out, seed, strict):
    """Run the full experiment; exit 0 iff every criterion passes."""
    cfg = _load(config, config_opt, strict, seed)
    rep = _run(cfg)
    d = _out_dir(out, cfg)
    _write_report(rep, d)
    for name, c in rep.criteria.items():
        status = "PASS" if c["pass"] else "FAIL"
        click.echo(f"{status} {name}: {c['criterion']} (value={c['value']:.6g}, threshold={c['threshold']:.6g})")
    if rep.stage == "compatibility":
        click.echo(f"compatibility: {rep.message}")
    click.echo(f"wrote {d / (rep.name + '.json')}")
    if not rep.passed:
        sys.exit(EXIT_CRITERION)


# sweep --------------------------------------------------------------------------


def _sweep_one(args):
    path, out, strict, seed = args
    try:
        cfg = parse_config(path, strict=strict)
        if seed is not None:
            cfg = config_from_dict(dict(cfg.raw, seed=seed), strict=strict)
    except ConfigError as exc:
        return str(path), EXIT_CONFIG, f"config error: {exc}", None
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            rep = run_experiment(cfg, keep_fields=False)
    except _NUMERIC_ERRORS as exc:
        return str(path), EXIT_NUMERIC, f"numerical error: {exc}", None
    _write_report(rep, Path(out))
    return str(path), 0 if rep.passed else EXIT_CRITERION, "", summary_row(rep)


@main.command()
@click.argument("config_dir", type=click.Path(exists=True, file_okay=False))
@click.option("--out", type=click.Path(file_okay=False), default="out", show_default=True,
              envvar=f"{ENV_PREFIX}_OUT")
@click.option("--workers", type=int, default=1, show_default=True, envvar=f"{ENV_PREFIX}_WORKERS")
@click.option("--seed", type=int, default=None, envvar=f"{ENV_PREFIX}_SEED")
@click.option("--strict/--no-strict", default=True, envvar=f"{ENV_PREFIX}_STRICT")
def sweep(config_dir, out, workers, seed, strict):
    """Run every config in CONFIG_DIR and aggregate one summary CSV."""
    paths = sorted(p for p in Path(config_dir).iterdir() if p.suffix in (".yaml", ".yml", ".json"))
    if not paths:
        _fail(EXIT_CONFIG, f"error: no configs in {config_dir}")
    d = Path(out)
    d.mkdir(parents=True, exist_ok=True)
    jobs = [(p, d, strict, seed) for p in paths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_sweep_one, jobs))
    else:
        results = [_sweep_one(j) for j in jobs]
    rows = sorted((r[3] for r in results if r[3] is not None), key=lambda row: row["name"])
    (d / "summary.csv").write_text(summary_table(rows))
    worst = 0
    for path, code, msg, row in results:
        status = "PASS" if code == 0 else f"EXIT {code}"
        click.echo(f"{status} {path}" + (f": {msg}" if msg else ""))
        if code:
            worst = code if worst == 0 else min(worst, code)
    click.echo(f"wrote {d / 'summary.csv'} ({len(rows)} rows)")
    sys.exit(worst)


if __name__ == "__main__":  # pragma: no cover
    main()
