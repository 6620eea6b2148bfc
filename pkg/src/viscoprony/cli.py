"""Command-line interface.

Every subcommand writes its results into ``--out DIR`` (created if needed) as
CSV or JSON (``--format``). Numbers are printed with 12 significant digits so
that repeated runs are byte-identical. Exit codes: 0 success, 1 numerical
failure, 2 invalid input.

A plain-text config file (``--config FILE`` before the subcommand) may supply
any option; sections are named after subcommands, ``[DEFAULT]`` applies to all
of them, and keys are option names without the leading dashes. Flags given on
the command line win.
"""

from __future__ import annotations

import configparser
import csv
import functools
import json
import math
import sys
import warnings
from pathlib import Path

import click
import numpy as np

from . import __version__
from ._format import fmt, jsonable
from .assembly import build_solution, report_json, validate as validate_solution, write_solution_csv
from .burgers import (
    MODE_TABLE_COLUMNS,
    BurgersDerived,
    BurgersParameters,
    derive,
    mode_table,
    write_mode_table,
)
from .disk import ModalData, build_basis, project, sample, write_zero_table, zero_table
from .errors import NumericalError
from .prony import PronyModel, fit_prony, log_grid
from .spectrum import (
    SPECTRUM_COLUMNS,
    branch_trace as trace_branches,
    limit_spectrum as compute_limit,
    spectrum as compute_spectrum,
    spectrum_record,
    spectrum_rows,
)

EXIT_NUMERIC = 1
EXIT_INVALID = 2


class FloatList(click.ParamType):
    """Comma- or whitespace-separated floats, e.g. ``"100, 1e100"``."""

    name = "floats"

    def convert(self, value, param, ctx):
        if isinstance(value, (list, tuple)):
            return [float(v) for v in value]
        parts = [p for p in str(value).replace(",", " ").split() if p]
        try:
            out = [float(p) for p in parts]
        except ValueError:
            self.fail(f"{value!r} is not a list of numbers", param, ctx)
        if any(not math.isfinite(v) for v in out):
            self.fail(f"{value!r} contains non-finite values", param, ctx)
        return out


FLOATS = FloatList()


def _load_config(path) -> dict:
    parser = configparser.ConfigParser()
    with open(path) as fh:
        parser.read_file(fh)
    out = {}
    for name, cmd in main.commands.items():
        section = parser[name] if parser.has_section(name) else parser.defaults()
        lookup = {}
        for p in cmd.params:
            lookup[p.name] = p.name
            for opt in p.opts:
                lookup[opt.lstrip("-").replace("-", "_")] = p.name
        own = set(parser[name]) - set(parser.defaults()) if parser.has_section(name) else set()
        values = {}
        for key, val in section.items():
            norm = key.replace("-", "_")
            if norm not in lookup:
                if key in own:
                    raise click.BadParameter(f"unknown key {key!r} in section [{name}]")
                continue
            values[lookup[norm]] = _config_value(cmd, lookup[norm], val)
        out[name] = values
    return out


def _config_value(cmd, pname, raw):
    param = next(p for p in cmd.params if p.name == pname)
    if getattr(param, "is_flag", False):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    return raw


def _fail(code, message):
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(func):
    """Map domain errors to exit codes with a message on standard error."""

    @functools.wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except NumericalError as exc:
            _fail(EXIT_NUMERIC, str(exc))
        except (ValueError, KeyError, json.JSONDecodeError) as exc:
            _fail(EXIT_INVALID, str(exc))

    return wrapper


def common_options(default_tol=None):
    def deco(func):
        func = click.option(
            "--tol", type=click.FloatRange(min=0, min_open=True), default=default_tol,
            show_default=True, help="Command-specific tolerance.",
        )(func)
        func = click.option("--seed", type=int, default=0, show_default=True,
                            help="Seed for randomized initial data.")(func)
        func = click.option("--format", "fmt_", type=click.Choice(["csv", "json"]),
                            default="csv", show_default=True)(func)
        func = click.option("--out", type=click.Path(file_okay=False), default=".",
                            show_default=True, help="Output directory.")(func)
        return func

    return deco


def _outdir(out) -> Path:
    path = Path(out)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _write_json(path, data):
    with open(path, "w") as fh:
        json.dump(jsonable(data), fh, indent=2, sort_keys=False)
        fh.write("\n")


def _write_csv(path, header, rows):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        for row in rows:
            w.writerow([fmt(v) for v in row])


def _write_table(out: Path, stem, fmt_, header, rows):
    if fmt_ == "csv":
        path = out / f"{stem}.csv"
        _write_csv(path, header, rows)
    else:
        path = out / f"{stem}.json"
        _write_json(path, [dict(zip(header, row)) for row in rows])
    return path


@click.group(context_settings={"help_option_names": ["-h", "--help"]})
@click.version_option(__version__, prog_name="viscoprony")
@click.option("--config", type=click.Path(exists=True, dir_okay=False),
              help="key = value config file with one section per subcommand.")
@click.pass_context
def main(ctx, config):
    """Spectral analysis of the viscoelastic wave equation with Prony memory kernels."""
    if config:
        ctx.default_map = _load_config(config)


# Prony fit -------------------------------------------------------------------


@main.command()
@click.option("--beta", type=click.FloatRange(0, 1, min_open=True), required=True,
              help="Stretching exponent of exp(-t**beta).")
@click.option("--terms", type=click.IntRange(min=1), required=True)
@click.option("--tmin", type=click.FloatRange(min=0, min_open=True), default=1e-3, show_default=True)
@click.option("--tmax", type=click.FloatRange(min=0, min_open=True), default=1e2, show_default=True)
@click.option("--points", type=click.IntRange(min=2), default=200, show_default=True)
@click.option("--strategy", type=click.Choice(["greedy", "uniform"]), default="greedy",
              show_default=True)
@common_options()
@handle_errors
def fit(beta, terms, tmin, tmax, points, strategy, out, fmt_, seed, tol):
    """Fit a normalized Prony series to the stretched exponential.

    Writes model.json and fit.csv (or fit.json). With --tol, a maximum
    absolute misfit above TOL is a numerical failure.
    """
    if tmax <= tmin:
        raise ValueError("--tmax must exceed --tmin")
    report = fit_prony(beta, terms, log_grid(tmin, tmax, points), rate_strategy=strategy)
    if tol is not None and report.max_abs_error > tol:
        raise NumericalError(f"max misfit {report.max_abs_error:.3g} exceeds --tol {tol:g}")
    out = _outdir(out)
    (out / "model.json").write_text(report.model.to_json(indent=2) + "\n")
    if fmt_ == "csv":
        report.write_csv(out / "fit.csv")
    else:
        rows = [dict(zip(["t", "target", "fitted", "abs_error"], r)) for r in report.rows()]
        _write_json(out / "fit.json", {"summary": report.summary(), "samples": rows})
    click.echo(json.dumps(report.summary()))


# Spectrum --------------------------------------------------------------------


def _model_options(func):
    func = click.option("--r", "rates", type=FLOATS, help="Kernel rates r_i.")(func)
    func = click.option("--b", "amps", type=FLOATS, help="Kernel amplitudes b_i = s_i r_i.")(func)
    func = click.option("--model", "model_file", type=click.Path(exists=True, dir_okay=False),
                        help="Model JSON written by `fit`, or derived.json from `burgers`.")(func)
    return func


def _read_model(model_file, amps, rates) -> PronyModel:
    if model_file and (amps or rates):
        raise ValueError("give either --model or --b/--r, not both")
    if model_file:
        data = json.loads(Path(model_file).read_text())
        if "terms" in data:
            model = PronyModel.from_dict(data)
        elif "b1" in data:
            model = BurgersDerived.from_dict(data).prony_model()
        else:
            raise ValueError(f"{model_file}: not a model file")
    else:
        if not amps or not rates:
            raise ValueError("a model is required: --model FILE or --b and --r")
        if len(amps) != len(rates):
            raise ValueError("--b and --r must have the same length")
        model = PronyModel.from_kernel(amps, rates)
    if not model.normalized:
        raise ValueError(f"model is not normalized (sum b_i/r_i = {model.c2:.12g})")
    return model


@main.command()
@_model_options
@click.option("--lambda", "lambdas", type=FLOATS, required=True,
              help="Laplacian eigenvalues, e.g. '100,1e100'.")
@common_options(default_tol=1e-10)
@handle_errors
def spectrum(model_file, amps, rates, lambdas, out, fmt_, seed, tol):
    """Eigenvalues of the modal system for each lambda.

    Values above 1e12 use the limit spectrum plus the pair ±i sqrt(lambda)
    and are flagged "asymptotic". A backward error above --tol on any
    directly computed eigenvalue is a numerical failure.
    """
    model = _read_model(model_file, amps, rates)
    if not lambdas:
        raise ValueError("empty lambda list")
    if any(lam <= 0 for lam in lambdas):
        raise ValueError("lambda values must be positive")
    results = [compute_spectrum(model, lam) for lam in lambdas]
    for res in results:
        if not res.asymptotic and np.max(res.backward_errors) > tol:
            raise NumericalError(
                f"backward error {np.max(res.backward_errors):.3g} exceeds --tol {tol:g} "
                f"at lambda={res.lam:g}"
            )
    out = _outdir(out)
    if fmt_ == "csv":
        _write_csv(out / "spectrum.csv", SPECTRUM_COLUMNS, spectrum_rows(results))
    else:
        _write_json(out / "spectrum.json", [spectrum_record(r) for r in results])


@main.command("limit-spectrum")
@_model_options
@common_options()
@handle_errors
def limit_spectrum(model_file, amps, rates, out, fmt_, seed, tol):
    """Real roots of sum b_i/(z + r_i) = 1 (the large-lambda real branches)."""
    model = _read_model(model_file, amps, rates)
    roots = compute_limit(model)
    rows = [[model.n_terms, i, z] for i, z in enumerate(roots, start=1)]
    _write_table(_outdir(out), "limit_spectrum", fmt_, ["N", "index", "z"], rows)


@main.command("branch-trace")
@_model_options
@click.option("--lambda-min", type=click.FloatRange(min=0, min_open=True), default=1.0,
              show_default=True)
@click.option("--lambda-max", type=click.FloatRange(min=0, min_open=True), default=1e6,
              show_default=True)
@click.option("--points", type=click.IntRange(min=2), default=61, show_default=True)
@common_options()
@handle_errors
def branch_trace(model_file, amps, rates, lambda_min, lambda_max, points, out, fmt_, seed, tol):
    """Eigenvalue branches on a log-spaced lambda grid (plot-ready)."""
    model = _read_model(model_file, amps, rates)
    if lambda_max <= lambda_min:
        raise ValueError("--lambda-max must exceed --lambda-min")
    if lambda_max > 1e12:
        raise ValueError("branch tracing is limited to lambda <= 1e12")
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        tr = trace_branches(model, np.geomspace(lambda_min, lambda_max, points))
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    rows = []
    for lam, zs in zip(tr.lams, tr.branches):
        for j, z in enumerate(zs):
            rows.append([lam, j, z.real, z.imag])
    _write_table(_outdir(out), "branches", fmt_, ["lambda", "branch", "re", "im"], rows)


# Burgers and disk ------------------------------------------------------------

PROFILE_HELP = "zero | mode:n:k[:amp] | bump[:amp] | random[:amp]"


def _disk_options(func):
    opts = [
        click.option("--radius", type=click.FloatRange(min=0, min_open=True), default=1.0,
                     show_default=True),
        click.option("--n-max", type=click.IntRange(min=0), default=8, show_default=True),
        click.option("--k-max", type=click.IntRange(min=1), default=20, show_default=True),
        click.option("--u0", default=None, help=f"Initial displacement: {PROFILE_HELP}."),
        click.option("--u1", default="zero", show_default=True,
                     help=f"Initial velocity: {PROFILE_HELP}."),
        click.option("--times", type=FLOATS, default="0,1,5,20", show_default=True),
        click.option("--nr", type=click.IntRange(min=1), default=6, show_default=True),
        click.option("--ntheta", type=click.IntRange(min=1), default=8, show_default=True),
        click.option("--t-end", type=click.FloatRange(min=0, min_open=True), default=20.0,
                     show_default=True, help="Horizon of the oracle comparison."),
    ]
    for opt in reversed(opts):
        func = opt(func)
    return func


def _parse_profile(spec: str):
    parts = spec.strip().lower().split(":")
    kind = parts[0]
    try:
        if kind == "zero" and len(parts) == 1:
            return ("zero",)
        if kind == "mode" and len(parts) in (3, 4):
            n, k = int(parts[1]), int(parts[2])
            amp = float(parts[3]) if len(parts) == 4 else 1.0
            if k < 1:
                raise ValueError
            return ("mode", n, k, amp)
        if kind in ("bump", "random") and len(parts) in (1, 2):
            return (kind, float(parts[1]) if len(parts) == 2 else 1.0)
    except ValueError:
        pass
    raise ValueError(f"bad initial-data spec {spec!r}; expected {PROFILE_HELP}")


def _modal_profile(spec, basis, n_max, k_max, rng):
    """Modal coefficients of a real initial field."""
    prof = _parse_profile(spec)
    data = np.zeros((2 * n_max + 1, k_max), dtype=complex)
    kind = prof[0]
    if kind == "mode":
        _, n, k, amp = prof
        if abs(n) > n_max or k > k_max:
            raise ValueError(f"mode ({n},{k}) outside the truncation n_max={n_max}, k_max={k_max}")
        # amp * J_|n|(j r / R) cos(n theta)
        if n == 0:
            data[n_max, k - 1] = amp
        else:
            data[n_max + n, k - 1] += amp / 2
            data[n_max - n, k - 1] += amp / 2
    elif kind == "bump":
        R = basis.R
        values = sample(basis, lambda r, t: prof[1] * (1 - (r / R) ** 2) ** 2, 2 * n_max + 2)
        data = project(basis, values, n_max=n_max, k_max=k_max).u0
    elif kind == "random":
        # Hermitian coefficients decaying like 1/lambda_nk^2 so the series converges fast.
        for n in range(0, n_max + 1):
            for k in range(1, k_max + 1):
                scale = prof[1] / (1.0 + basis.eigenvalue(n, k) / basis.eigenvalue(0, 1)) ** 2
                c = scale * complex(rng.standard_normal(), 0 if n == 0 else rng.standard_normal())
                data[n_max + n, k - 1] = c
                data[n_max - n, k - 1] = np.conj(c)
    return data


def _disk_run(derived, radius, n_max, k_max, u0, u1, seed):
    rng = np.random.default_rng(seed)
    basis = build_basis(radius, derived.c2, n_max, k_max)
    a0 = _modal_profile(u0, basis, n_max, k_max, rng)
    a1 = _modal_profile(u1, basis, n_max, k_max, rng)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        sol = build_solution(derived, basis, ModalData(a0, a1, n_max, k_max))
    for w in caught:
        click.echo(f"warning: {w.message}", err=True)
    return sol


def _solution_outputs(out, fmt_, sol, times, nr, ntheta):
    radii = np.linspace(0.0, sol.basis.R, nr)
    thetas = 2 * np.pi * np.arange(ntheta) / ntheta
    if fmt_ == "csv":
        write_solution_csv(out / "solution.csv", sol, times, radii, thetas)
    else:
        from .assembly import evaluate

        rr, tt = np.meshgrid(radii, thetas, indexing="ij")
        rows = []
        for t in times:
            u = evaluate(sol, t, rr, tt)
            rows += [{"t": t, "r": r, "theta": th, "u": u[i, j]}
                     for i, r in enumerate(radii) for j, th in enumerate(thetas)]
        _write_json(out / "solution.json", rows)


def _validation_output(out, sol, derived, t_end, tol):
    report = validate_solution(sol, derived, t_end=t_end, tol=tol)
    _write_json(out / "validation.json", report_json(report))
    click.echo(
        f"max mode discrepancy {report['max_mode_discrepancy']:.3e}, "
        f"boundary max {report['boundary_max']:.3e}, ok={report['ok']}"
    )
    return report


@main.command()
@click.argument("e1", type=float, required=False)
@click.argument("e2", type=float, required=False)
@click.argument("eta1", type=float, required=False)
@click.argument("eta2", type=float, required=False)
@click.option("--derive-only", is_flag=True, help="Only write derived.json.")
@click.option("--lambda", "lambdas", type=FLOATS, default=None,
              help="Write modes.csv with exact and asymptotic roots at these lambda.")
@_disk_options
@common_options(default_tol=1e-6)
@handle_errors
def burgers(e1, e2, eta1, eta2, derive_only, lambdas, radius, n_max, k_max, u0, u1, times,
            nr, ntheta, t_end, out, fmt_, seed, tol):
    """Burgers model with constants E1 E2 ETA1 ETA2.

    Always writes derived.json. --lambda adds the mode table; --u0 runs the
    disk solution (solution.csv, validation.json). Validation failure beyond
    --tol exits 1.
    """
    if None in (e1, e2, eta1, eta2):
        raise ValueError("four constants E1 E2 ETA1 ETA2 are required")
    derived = derive(BurgersParameters(e1, e2, eta1, eta2))
    out = _outdir(out)
    (out / "derived.json").write_text(derived.to_json(indent=2) + "\n")
    click.echo(f"accumulation point {fmt(derived.accumulation)}")
    if derive_only:
        return
    if lambdas is not None:
        if not lambdas or any(lam <= 0 for lam in lambdas):
            raise ValueError("lambda values must be a nonempty list of positive numbers")
        rows = mode_table(derived, lambdas)
        if fmt_ == "csv":
            write_mode_table(out / "modes.csv", rows)
        else:
            _write_json(out / "modes.json", [dict(zip(MODE_TABLE_COLUMNS, r)) for r in rows])
    if u0 is not None:
        sol = _disk_run(derived, radius, n_max, k_max, u0, u1, seed)
        _solution_outputs(out, fmt_, sol, times, nr, ntheta)
        report = _validation_output(out, sol, derived, t_end, tol)
        if not report["ok"]:
            raise NumericalError("validation failed; see validation.json")


def _read_derived(path) -> BurgersDerived:
    data = json.loads(Path(path).read_text())
    if "b1" not in data:
        raise ValueError(f"{path}: not a derived.json file")
    return BurgersDerived.from_dict(data)


@main.command()
@click.option("--derived", "derived_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="derived.json written by `burgers`.")
@_disk_options
@common_options()
@handle_errors
def solve(derived_file, radius, n_max, k_max, u0, u1, times, nr, ntheta, t_end, out, fmt_,
          seed, tol):
    """Evaluate the disk solution on a polar grid (solution.csv)."""
    derived = _read_derived(derived_file)
    sol = _disk_run(derived, radius, n_max, k_max, u0 or "zero", u1, seed)
    _solution_outputs(_outdir(out), fmt_, sol, times, nr, ntheta)


@main.command()
@click.option("--derived", "derived_file", type=click.Path(exists=True, dir_okay=False),
              required=True, help="derived.json written by `burgers`.")
@_disk_options
@common_options(default_tol=1e-6)
@handle_errors
def validate(derived_file, radius, n_max, k_max, u0, u1, times, nr, ntheta, t_end, out, fmt_,
             seed, tol):
    """Compare every disk mode against the RK4 oracle (validation.json)."""
    derived = _read_derived(derived_file)
    sol = _disk_run(derived, radius, n_max, k_max, u0 or "zero", u1, seed)
    report = _validation_output(_outdir(out), sol, derived, t_end, tol)
    if not report["ok"]:
        raise NumericalError("validation failed; see validation.json")


# Bessel zeros ----------------------------------------------------------------


@main.command()
@click.option("--n", "n_max", type=click.IntRange(min=0), default=8, show_default=True,
              help="Largest Bessel order.")
@click.option("--k", "k_max", type=click.IntRange(min=1), default=20, show_default=True,
              help="Number of zeros per order.")
@common_options(default_tol=1e-10)
@handle_errors
def bessel(n_max, k_max, out, fmt_, seed, tol):
    """Positive zeros of J_n for n <= N, k <= K with residuals."""
    rows = zero_table(n_max, k_max)
    worst = max(r[3] for r in rows)
    if worst > tol:
        raise NumericalError(f"zero residual {worst:.3g} exceeds --tol {tol:g}")
    out = _outdir(out)
    if fmt_ == "csv":
        write_zero_table(out / "zeros.csv", n_max, k_max)
    else:
        _write_json(out / "zeros.json", [dict(zip(["n", "k", "zero", "residual"], r)) for r in rows])
