"""Command-line entry point ``nht``.

Usage: ``nht <subcommand> --config <path> [--seed N] [--threads N] [--out DIR]``

Each subcommand writes ``<kind>.csv``, ``<kind>.json`` and ``<kind>.svg`` to
the output directory. Exit codes: 0 success, 2 config error, 3 runtime or
numerical failure, 4 I/O error.
"""
from __future__ import annotations

import argparse
import dataclasses
import logging
import math
import os
import sys
from fractions import Fraction
from typing import Callable, Optional

import numpy as np

from . import __version__
from .analysis import (AVERAGING, EnsembleConfig, fit_crossover, fit_log_corrected, fit_loglog_slope,
                       early_window, late_window, map_realizations, reduce_samples, run_ensemble)
from .config import KINDS, RunConfig, load_config, serialize, validate
from .errors import ConfigError, FitError, InputError, NHTError, NoFixedPointError
from .lindblad import (build_dissipative_hamiltonian, build_effective_hamiltonian, evolve_correlation,
                       evolve_dissipative, nearest_neighbour_hopping)
from .model import build_hamiltonian, sample_disorder
from .output import file_sha256, provenance, read_series, write_csv, write_json, write_text
from .rgflow import exponents, fixed_points, integrate_flow
from .spectrum import (eigendecompose, gaussian_ks_distance, imdos_asymmetry, imdos_histogram,
                       median_localization_length, survival_function)
from .svgplot import LogLogPlot
from .theory import closed_form_scaling, make_tail, predict_xc

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME, EXIT_IO = 0, 2, 3, 4
DEFAULT_LAW = {"uniform": "uniform", "gaussian": "gaussian", "triangular": "linear"}

log = logging.getLogger("nht")


class DataFileError(Exception):
    """Unreadable or malformed input data."""


@dataclasses.dataclass
class Context:
    cfg: RunConfig
    out: str
    threads: int

    @property
    def header(self) -> dict:
        return provenance(self.cfg.digest(), self.cfg.master_seed, command=self.cfg.kind)

    def path(self, ext: str) -> str:
        return os.path.join(self.out, f"{self.cfg.kind}.{ext}")


def _safe(fn: Callable, *args, **kwargs) -> dict:
    try:
        return fn(*args, **kwargs).as_dict()
    except FitError as exc:
        return {"error": str(exc)}


def _window(value: list, default: Callable):
    if value:
        return tuple(value)
    try:
        return default()
    except FitError:
        return None


def _fit_report(ctx: Context, t: np.ndarray, xc: np.ndarray) -> dict:
    cfg = ctx.cfg
    series = (t, xc)
    report = {}
    lattice = cfg.lattice_spec()
    early = _window(cfg.fit.early, lambda: early_window(series))
    late = _window(cfg.fit.late, lambda: late_window(series, lattice))
    report["early"] = _safe(fit_loglog_slope, series, early) if early else {"error": "no early window"}
    report["late"] = _safe(fit_loglog_slope, series, late) if late else {"error": "no late window"}
    if late and late[0] > math.e:
        report["late_log_corrected"] = _safe(fit_log_corrected, series, late)
    crossover = tuple(cfg.fit.crossover) if cfg.fit.crossover else None
    report["crossover"] = _safe(fit_crossover, series, crossover)
    return report


def _law(cfg: RunConfig) -> Optional[str]:
    if cfg.fit.law:
        return cfg.fit.law
    if cfg.kind == "predict":
        return cfg.predict.tail
    if cfg.kind in ("simulate", "imdos") and cfg.disorder.flavor == "imaginary":
        return DEFAULT_LAW[cfg.disorder.kind]
    return None


def _plot(ctx: Context, t, xc, label: str, d: int, title: str = "", xlabel: str = "t", ylabel: str = "x_c") -> str:
    plot = LogLogPlot(title=title, xlabel=xlabel, ylabel=ylabel,
                      comment=" ".join(f"{k}={v}" for k, v in ctx.header.items()))
    plot.add(t, xc, label)
    law = _law(ctx.cfg)
    if law is not None and d in (1, 2):
        scaling = closed_form_scaling(law, d)
        t = np.asarray(t, float)
        mask = (t > math.e) if scaling.log_power else (t > 0)
        if mask.any():
            k = np.nonzero(mask)[0][mask.sum() // 2]
            plot.guide(scaling.exponent, t[k], np.asarray(xc)[k], scaling.describe(), scaling.log_power)
    return write_text(ctx.path("svg"), plot.render())


def _write_series(ctx: Context, t, mean, sem, n, extra: Optional[dict] = None) -> str:
    header = dict(ctx.header, averaging=AVERAGING, **(extra or {}))
    rows = zip(t, mean, sem, [n] * len(t))
    return write_csv(ctx.path("csv"), ["t", "mean_xc", "sem_xc", "n"], rows, header)


# -- subcommands ---------------------------------------------------------------


def cmd_simulate(ctx: Context) -> None:
    cfg = ctx.cfg
    ens = EnsembleConfig(cfg.lattice_spec(), cfg.disorder_spec(), cfg.t0, cfg.time_grid(), cfg.n_realizations,
                         cfg.propagator.method, cfg.propagator.step_factor, ctx.threads)
    result = run_ensemble(ens)
    digest = _write_series(ctx, result.times, result.mean_xc, result.sem_xc, result.n_realizations,
                           {"ensemble_hash": result.provenance["config_hash"], "failed": result.n_failed})
    report = {"data_file": os.path.basename(ctx.path("csv")), "data_sha256": digest,
              "n_realizations": result.n_realizations, "n_failed": result.n_failed,
              "fits": _fit_report(ctx, result.times, result.mean_xc)}
    write_json(ctx.path("json"), report, ctx.header)
    _plot(ctx, result.times, result.mean_xc, "ensemble mean", ens.lattice.dimension)


def cmd_imdos(ctx: Context) -> None:
    cfg = ctx.cfg
    lattice, spec = cfg.lattice_spec(), cfg.disorder_spec()

    def one(i):
        H = build_hamiltonian(lattice, cfg.t0, sample_disorder(spec, lattice, i), spec.flavor)
        return eigendecompose(H, vectors=(i == 0))

    spectra = map_realizations(one, range(cfg.n_realizations), ctx.threads)
    hist = imdos_histogram(spectra, bins=cfg.imdos.bins)
    digest = write_csv(ctx.path("csv"), ["bin_left", "bin_right", "density"], hist.rows(), ctx.header)
    xi = median_localization_length(spectra[0], lattice)
    pred = predict_xc(survival_function(hist), lattice.dimension, xi, cfg.time_grid(),
                      x_max=10 * lattice.diameter)
    ok = pred.valid
    report = {"data_file": os.path.basename(ctx.path("csv")), "data_sha256": digest,
              "n_eigenvalues": hist.n_samples, "mean": hist.mean(), "std": hist.std(),
              "ks_distance_gaussian": gaussian_ks_distance(hist), "asymmetry_sigma": imdos_asymmetry(spectra),
              "xi_median": xi, "predicted_slope": _safe(fit_loglog_slope, (pred.times[ok], pred.xc_pred[ok]))}
    write_json(ctx.path("json"), report, ctx.header)
    _plot(ctx, pred.times, pred.xc_pred, "predicted from ImDOS", lattice.dimension)


def cmd_predict(ctx: Context) -> None:
    cfg = ctx.cfg
    p = cfg.predict
    tail = make_tail(p.tail, **cfg.tail_params())
    pred = predict_xc(tail, p.d, p.xi, cfg.time_grid(), x_max=p.x_max)
    digest = write_csv(ctx.path("csv"), ["t", "xc_pred", "lambda_opt", "flag"], pred.rows(), ctx.header)
    law = closed_form_scaling(p.tail, p.d)
    ok = pred.valid
    series = (pred.times[ok], pred.xc_pred[ok])
    fit = _safe(fit_log_corrected if law.log_power else fit_loglog_slope, series)
    report = {"data_file": os.path.basename(ctx.path("csv")), "data_sha256": digest,
              "law": law.describe(), "exponent": str(law.exponent), "fit": fit,
              "n_flagged": int((~ok).sum())}
    write_json(ctx.path("json"), report, ctx.header)
    _plot(ctx, pred.times, pred.xc_pred, f"{p.tail} tail", p.d)


def cmd_lindblad(ctx: Context) -> None:
    cfg = ctx.cfg
    lattice = cfg.lattice_spec()
    times = cfg.time_grid()
    n = lattice.n_sites
    G0 = np.zeros((n, n), complex)
    G0[lattice.center_index, lattice.center_index] = 1.0
    lb = cfg.lindblad

    def observe(series):
        return np.vstack([series.traces, series.spreading(lattice)])

    if lb.model == "dissipative":
        H = build_dissipative_hamiltonian(lattice, lb.Gamma, np.full(n, lb.gamma), lb.form)
        samples = [observe(evolve_dissipative(H, G0, times))]
    else:
        spec = cfg.disorder_spec() if cfg.disorder.flavor == "imaginary" else None
        h = nearest_neighbour_hopping(lattice, cfg.t0)

        def one(i):
            rates = np.full(n, lb.gamma)
            if spec is not None:
                # loss rates 2 (max V - V) reproduce the imaginary potential up to a global shift
                v = sample_disorder(spec, lattice, i).values
                rates = rates + 2 * (v.max() - v)
            return observe(evolve_correlation(build_effective_hamiltonian(h, rates, lattice), G0, times))

        count = cfg.n_realizations if spec is not None else 1
        samples = map_realizations(one, range(count), ctx.threads)
    samples = np.array(samples)
    trace = samples[:, 0].mean(axis=0)
    mean, sem = reduce_samples(samples[:, 1])
    header = dict(ctx.header, averaging=AVERAGING, model=lb.model)
    digest = write_csv(ctx.path("csv"), ["t", "trace", "xc", "sem_xc", "n"],
                       zip(times, trace, mean, sem, [len(samples)] * len(times)), header)
    report = {"data_file": os.path.basename(ctx.path("csv")), "data_sha256": digest, "model": lb.model,
              "fits": _fit_report(ctx, times, mean)}
    write_json(ctx.path("json"), report, ctx.header)
    _plot(ctx, times, mean, f"{lb.model} correlations", lattice.dimension)


def cmd_rg(ctx: Context) -> None:
    r = ctx.cfg.rg
    fp = fixed_points(r.d)
    flow = integrate_flow(r.g0, r.d, r.l_max, r.dl)
    digest = write_csv(ctx.path("csv"), ["l", "g"], zip(flow.l, flow.g), ctx.header)
    report = {"data_file": os.path.basename(ctx.path("csv")), "data_sha256": digest, "d": r.d,
              "g_star": fp.g2, "g_star_physical": fp.g2_physical, "g_star_stable": fp.g2_stable,
              "gaussian_stable": fp.g1_stable, "g_final": flow.final, "runaway": flow.runaway}
    try:
        ex = exponents(r.d)
        report.update(z=str(ex["z"]), z_float=float(ex["z"]), inverse_z=str(ex["inverse_z"]))
    except NoFixedPointError as exc:
        report["z"] = None
        report["note"] = str(exc)
    write_json(ctx.path("json"), report, ctx.header)
    keep = (flow.l > 0) & (flow.g > 0)
    plot = LogLogPlot(title=f"coupling flow, d = {r.d}", xlabel="l", ylabel="g",
                      comment=" ".join(f"{k}={v}" for k, v in ctx.header.items()))
    plot.add(flow.l[keep], flow.g[keep], "g(l)")
    write_text(ctx.path("svg"), plot.render())


def cmd_fit(ctx: Context) -> None:
    path = ctx.cfg.fit.input
    try:
        source_header, t, xc = read_series(path)
        digest = file_sha256(path)
    except (OSError, InputError) as exc:
        raise DataFileError(str(exc)) from exc
    report = {"data_file": os.path.abspath(path), "data_sha256": digest,
              "source_provenance": source_header, "fits": _fit_report(ctx, t, xc)}
    write_json(ctx.path("json"), report, ctx.header)
    digest_csv = write_csv(ctx.path("csv"), ["t", "xc"], zip(t, xc),
                           dict(ctx.header, source_sha256=digest))
    log.debug("fit copy written with hash %s", digest_csv)
    _plot(ctx, t, xc, os.path.basename(path), ctx.cfg.lattice_spec().dimension)


COMMANDS = {"simulate": cmd_simulate, "imdos": cmd_imdos, "predict": cmd_predict,
            "lindblad": cmd_lindblad, "rg": cmd_rg, "fit": cmd_fit}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nht", description="Non-Hermitian disordered transport experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name in KINDS:
        p = sub.add_parser(name, help=f"run a {name} experiment")
        p.add_argument("--config", required=True, help="TOML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override master_seed")
        p.add_argument("--threads", type=int, default=1, help="worker threads for realizations")
        p.add_argument("--out", default=None, help="output directory (overrides config output)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = load_config(args.config)
        if cfg.kind != args.command:
            raise ConfigError(f"config kind {cfg.kind!r} does not match subcommand {args.command!r}")
        if args.seed is not None:
            cfg = validate(dataclasses.replace(cfg, master_seed=args.seed))
        if args.threads < 1:
            raise ConfigError("--threads must be >= 1")
        if args.seed is not None and not 0 <= args.seed < 2 ** 64:
            raise ConfigError("--seed must be a 64-bit unsigned integer")
    except ConfigError as exc:
        print(f"nht: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except OSError as exc:
        print(f"nht: cannot read config: {exc}", file=sys.stderr)
        return EXIT_IO

    ctx = Context(cfg, args.out or cfg.output, args.threads)
    try:
        os.makedirs(ctx.out, exist_ok=True)
        COMMANDS[cfg.kind](ctx)
    except (OSError, DataFileError) as exc:
        print(f"nht: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ConfigError as exc:
        print(f"nht: config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NHTError, ValueError, ArithmeticError) as exc:
        print(f"nht: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    print(f"nht: wrote {ctx.path('csv')}, {ctx.path('json')}, {ctx.path('svg')}")
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
