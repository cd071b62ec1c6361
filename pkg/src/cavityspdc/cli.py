"""
Command-line frontend.

    cavityspdc <subcommand> [--config PATH] [--preset paper] [--seed N] [--out DIR] [flags]

Reports go to standard output; CSV and JSON artifacts go to the output
directory (``--out``, else ``$CAVITYSPDC_OUT``, else the config's
``output_dir``, else ``./out``). Exit codes: 0 success, 2 configuration or
validation error, 3 non-convergence / no solution, 1 internal error.
"""

from __future__ import annotations

import argparse
import os
import sys
from pathlib import Path

import numpy as np
from scipy.constants import c

from . import __version__, config as config_mod
from .biphoton import convolve_g2, fwhm, g2_curve, t_fwhm_analytic
from .clustering import analyze
from .counting import (
    SourceModel,
    UndefinedCARError,
    car,
    expected_rates,
    histogram_car,
    histogram_coincidences,
    simulate_timetags,
)
from .errors import ConfigError, DomainError, NoSolutionError
from .fitting import FitError, fit_detector_rate, fit_g2_histogram, fit_visibility_decay
from .interference import michelson_visibility
from .io import write_csv, write_g2_curve, write_histogram, write_json
from .qpm import SpdcProcess, gain_fwhm, gain_spectrum, solve_poling_period

OUT_ENV = "CAVITYSPDC_OUT"

EXIT_OK, EXIT_INTERNAL, EXIT_CONFIG, EXIT_COMPUTE = 0, 1, 2, 3


class NotConverged(Exception):
    """A fit finished without meeting its tolerances; artifacts were written."""


def _out_dir(args, cfg) -> Path:
    path = args.out or os.environ.get(OUT_ENV) or cfg.output_dir or "out"
    p = Path(path)
    p.mkdir(parents=True, exist_ok=True)
    return p


def _seed(args, cfg) -> int:
    return args.seed if args.seed is not None else cfg.simulation.get("seed", 0)


def _sim(cfg, key):
    if not cfg.simulation:
        raise ConfigError("simulation: section required by this command is missing")
    return cfg.simulation[key]


def _table(rows):
    width = max(len(k) for k, _ in rows)
    for k, v in rows:
        print(f"  {k:<{width}}  {v}")


def _warn(msg):
    print(f"warning: {msg}", file=sys.stderr)


def _exclusion(cfg):
    # accidentals are read from bins beyond ten correlation times
    if cfg.biphoton is not None:
        return 10 * t_fwhm_analytic(cfg.biphoton.gamma_s, cfg.biphoton.gamma_i)
    return _sim(cfg, "half_range_s") / 2


def _check_converged(res, what):
    if not res.converged:
        raise NotConverged(f"{what} did not converge ({res.reason})")


# -- cluster ---------------------------------------------------------------------


def cmd_cluster(args, cfg, out):
    cfg.require("cavity")
    ys, zs = cfg.cavity.mode_structure("y"), cfg.cavity.mode_structure("z")
    try:
        rep = analyze(ys.fsr, zs.fsr, ys.linewidth, zs.linewidth).as_report()
    except DomainError as exc:
        raise ConfigError(f"cavity: {exc}") from None
    rep.update(fsr_s_hz=ys.fsr, fsr_i_hz=zs.fsr, fsr_source_s=ys.source, fsr_source_i=zs.source)
    write_json(out / "cluster.json", rep)
    print("cluster analysis")
    _table(
        [
            ("FSR signal (y)", f"{ys.fsr / 1e9:.4f} GHz ({ys.source})"),
            ("FSR idler (z)", f"{zs.fsr / 1e9:.4f} GHz ({zs.source})"),
            ("cluster spacing", f"{rep['cluster_spacing_hz'] / 1e9:.2f} GHz"),
            ("N_s", f"{rep['N_s']:.4f}"),
            ("N_i", f"{rep['N_i']:.4f}"),
            ("orthogonal offset", f"{rep['delta_nu_hz'] / 1e9:.4f} GHz"),
            ("linewidth sum", f"{(ys.linewidth + zs.linewidth) / 1e9:.4f} GHz"),
            ("single mode", str(rep["single_mode"]).lower()),
        ]
    )


# -- g2 ----------------------------------------------------------------------------


def _curves(cfg):
    cfg.require("biphoton")
    span = cfg.simulation.get("half_range_s", 5e-9)
    step = cfg.simulation.get("grid_step_s", 0.5e-12)
    base = g2_curve(cfg.biphoton, span + 2e-9, step)
    detected = convolve_g2(base, cfg.detector) if cfg.detector else None
    return base, detected


def cmd_g2(args, cfg, out):
    base, detected = _curves(cfg)
    bp = cfg.biphoton
    rows = [
        ("modes (M)", str(bp.resolved_modes())),
        ("T_FWHM analytic", f"{t_fwhm_analytic(bp.gamma_s, bp.gamma_i) * 1e9:.4f} ns"),
        ("intrinsic FWHM", f"{fwhm(base) * 1e9:.4f} ns"),
    ]
    report = {
        "t_fwhm_analytic_s": t_fwhm_analytic(bp.gamma_s, bp.gamma_i),
        "intrinsic_fwhm_s": fwhm(base),
        "modes": bp.resolved_modes(),
    }
    if detected is not None:
        rows.append(("detector gamma", f"{cfg.detector.gamma:.6g} 1/s"))
        rows.append(("detected FWHM", f"{fwhm(detected) * 1e9:.4f} ns"))
        report["detector_gamma_per_s"] = cfg.detector.gamma
        report["detected_fwhm_s"] = fwhm(detected)
        cols = [base.tau, base.values, detected.values]
        write_csv(out / "g2_analytic.csv", ["tau_s", "g2", "detected"], cols)
    else:
        write_g2_curve(out / "g2_analytic.csv", base)

    fit = None
    if args.simulate:
        cfg.require("chains", "rate_coeff", "pump_mw")
        bw = _sim(cfg, "bin_width_s")
        src = SourceModel(cfg.rate_coeff, cfg.pump_mw, base, cfg.detector)
        s, i = simulate_timetags(
            src, *cfg.chains, _sim(cfg, "duration_s"), _seed(args, cfg), jitter_model=_sim(cfg, "jitter_model")
        )
        hist = histogram_coincidences(s, i, bw, _sim(cfg, "half_range_s"))
        write_histogram(out / "g2_histogram.csv", hist)
        exclusion = _exclusion(cfg)
        report.update(singles_s=len(s), singles_i=len(i), histogram_total=hist.total)
        rows += [("singles s / i", f"{len(s)} / {len(i)}"), ("histogram total", str(hist.total))]
        try:
            r_c, r_ac, value = histogram_car(hist, _sim(cfg, "coincidence_window_s"), exclusion)
            report["car"] = value
            rows.append(("CAR", f"{value:.1f}"))
        except UndefinedCARError as exc:
            report["car"] = None
            report["car_lower_bound"] = exc.lower_bound
            _warn(str(exc))
        if args.fit:
            if cfg.detector is None:
                raise ConfigError("biphoton.detector_gamma_per_s: required for --fit")
            fit = fit_g2_histogram(hist.edges, hist.counts, bp, cfg.detector.gamma, poisson=True)
            rows += [
                ("fit gamma_s", f"{fit['gamma_s'] / 1e6:.2f} +- {fit.error('gamma_s') / 1e6:.2f} MHz"),
                ("fit gamma_i", f"{fit['gamma_i'] / 1e6:.2f} +- {fit.error('gamma_i') / 1e6:.2f} MHz"),
                ("fit gamma_det", f"{fit['gamma_det']:.5g} 1/s"),
            ]
    elif args.fit:
        if cfg.target_fwhm is None:
            raise ConfigError("biphoton.target_fwhm_s: required for --fit without --simulate")
        g0 = cfg.detector.gamma if cfg.detector else 3e10
        fit = fit_detector_rate(bp, cfg.target_fwhm, g0)
        rows.append(("fitted gamma_det", f"{fit['gamma_det']:.12g} 1/s"))

    write_json(out / "g2_report.json", report)
    if fit is not None:
        write_json(out / "g2_fit.json", fit.to_dict())
    print("biphoton correlation")
    _table(rows)
    if fit is not None:
        _check_converged(fit, "G2 fit")


# -- counts --------------------------------------------------------------------------


def _window_fraction(curve, window):
    inside = np.abs(curve.tau - curve.tau[np.argmax(curve.values)]) <= window / 2
    total = np.trapezoid(curve.values, curve.tau)
    return float(np.trapezoid(curve.values[inside], curve.tau[inside]) / total)


def cmd_counts(args, cfg, out):
    cfg.require("chains", "rate_coeff")
    powers = args.powers if args.powers else _sim(cfg, "powers_mw")
    window = _sim(cfg, "coincidence_window_s")
    base, detected = _curves(cfg) if cfg.biphoton else (None, None)
    curve = detected if detected is not None else base
    rows, undefined = [], 0
    for k, p in enumerate(powers):
        if p < 0:
            raise ConfigError(f"--powers: pump power must be >= 0, got {p}")
        if args.expectation:
            frac = _window_fraction(curve, window) if curve is not None else 1.0
            src = SourceModel(cfg.rate_coeff, p)
            r = expected_rates(src, *cfg.chains, window, frac)
            ss, si, rc, rac = r["singles_s"], r["singles_i"], r["coincidences"], r["accidentals"]
            try:
                value = car(rc, rac)
            except UndefinedCARError as exc:
                value = None
                _warn(f"{p:g} mW: {exc}")
        else:
            src = SourceModel(cfg.rate_coeff, p, base, cfg.detector)
            dur = _sim(cfg, "duration_s")
            s, i = simulate_timetags(
                src, *cfg.chains, dur, (_seed(args, cfg), k), jitter_model=_sim(cfg, "jitter_model")
            )
            hist = histogram_coincidences(s, i, _sim(cfg, "bin_width_s"), _sim(cfg, "half_range_s"))
            ss, si = len(s) / dur, len(i) / dur
            try:
                r_c, _, value = histogram_car(hist, window, _exclusion(cfg))
                rc = r_c / dur
            except UndefinedCARError as exc:
                value, rc = None, (exc.lower_bound - 1) / dur
                _warn(f"{p:g} mW: {exc}")
        undefined += value is None
        rows.append((p, ss, si, rc, value))
    cols = list(zip(*rows)) if rows else [[] for _ in range(5)]
    write_csv(out / "counts.csv", ["power_mw", "singles_s", "singles_i", "coincidences", "car"], cols)
    mode = "expectation" if args.expectation else "simulation"
    print(f"pump power sweep ({mode})")
    print(f"  {'P (mW)':>8} {'S_s (1/s)':>12} {'S_i (1/s)':>12} {'R_c (1/s)':>12} {'CAR':>10}")
    for p, ss, si, rc, value in rows:
        cs = "undefined" if value is None else f"{value:.1f}"
        print(f"  {p:8.1f} {ss:12.1f} {si:12.1f} {rc:12.2f} {cs:>10}")


# -- michelson ---------------------------------------------------------------------------


def cmd_michelson(args, cfg, out):
    cfg.require("michelson")
    lengths = args.L if args.L is not None else cfg.michelson_lengths
    if not lengths:
        raise ConfigError("interference.michelson.path_differences_m: no path differences given")
    L = np.asarray(lengths, dtype=float)
    V = np.asarray(michelson_visibility(cfg.michelson, L), dtype=float).reshape(L.shape)
    if cfg.michelson_noise:
        rng = np.random.default_rng(_seed(args, cfg))
        V = V * (1 + cfg.michelson_noise * rng.standard_normal(V.shape))
    write_csv(out / "michelson.csv", ["path_difference_m", "visibility"], [L, V])
    print("Michelson visibility")
    for x, v in zip(L, V):
        print(f"  L = {x:8.4f} m   V = {v:.6f}")
    if args.fit:
        ref = cfg.cavity.linewidth("y") if cfg.cavity is not None else None
        res = fit_visibility_decay(L, V, ref)
        write_json(out / "michelson_fit.json", res.to_dict())
        rows = [
            ("fitted linewidth", f"{res['linewidth'] / 1e6:.2f} +- {res.error('linewidth') / 1e6:.2f} MHz"),
            ("background R", f"{res['background']:.5f} +- {res.error('background'):.5f}"),
        ]
        if ref:
            rows.append(("cavity linewidth", f"{ref / 1e6:.2f} MHz"))
            rows.append(("deviation", f"{100 * res.extra['relative_deviation']:.2f} %"))
        _table(rows)
        _check_converged(res, "visibility fit")


# -- qpm -------------------------------------------------------------------------------------


def cmd_qpm(args, cfg, out):
    cfg.require("crystal")
    order = args.order if args.order is not None else cfg.qpm.get("order", 1)
    pump, signal = cfg.pump_wavelength, cfg.signal_wavelength
    idler = 1.0 / (1.0 / pump - 1.0 / signal)
    try:
        proc = SpdcProcess(pump, signal, idler, cfg.crystal.temperature, order)
    except DomainError as exc:
        raise ConfigError(f"qpm: {exc}") from None
    period = solve_poling_period(pump, signal, idler, cfg.crystal, order=order)
    span = cfg.qpm.get("span_hz", 10e12)
    n = cfg.qpm.get("points", 2001)
    det = np.linspace(-span / 2, span / 2, n)
    gain = gain_spectrum(proc, cfg.crystal, det, period)
    write_csv(out / "qpm_gain.csv", ["detuning_hz", "gain"], [det, gain])
    configured = cfg.crystal.poling_period * order
    try:
        width = gain_fwhm(proc, cfg.crystal, period, span=max(span, 20e12))
    except DomainError:
        width = None
    rep = {
        "order": order,
        "poling_period_m": period,
        "configured_period_m": configured,
        "relative_difference": (period - configured) / configured,
        "gain_fwhm_hz": width,
        "temperature_c": cfg.crystal.temperature,
    }
    write_json(out / "qpm.json", rep)
    print("quasi-phase matching")
    _table(
        [
            ("process", f"{pump * 1e9:.1f} nm (y) -> {signal * 1e9:.1f} nm (y) + {idler * 1e9:.1f} nm (z)"),
            ("order", str(order)),
            ("solved period", f"{period * 1e6:.3f} um"),
            ("configured period", f"{configured * 1e6:.3f} um"),
            ("difference", f"{100 * rep['relative_difference']:+.2f} %"),
            ("gain FWHM", "n/a" if width is None else f"{width / 1e12:.3f} THz"),
        ]
    )


# -- entry point ---------------------------------------------------------------------------------


def _floats(text):
    try:
        return [float(x) for x in text.replace(",", " ").split()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected a comma-separated list of numbers, got {text!r}") from None


def build_parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON run configuration")
    common.add_argument("--preset", choices=config_mod.PRESETS, help="built-in configuration to start from")
    common.add_argument("--seed", type=int, help="override simulation.seed")
    common.add_argument("--out", help=f"output directory (default: ${OUT_ENV}, then config output_dir)")

    p = argparse.ArgumentParser(prog="cavityspdc", description="Cavity SPDC pair-source toolkit")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)

    sub.add_parser("cluster", parents=[common], help="cluster-effect analysis")

    g = sub.add_parser("g2", parents=[common], help="signal-idler correlation curve")
    mode = g.add_mutually_exclusive_group()
    mode.add_argument("--analytic", action="store_true", help="analytic curve only (default)")
    mode.add_argument("--simulate", action="store_true", help="also simulate a coincidence histogram")
    g.add_argument("--fit", action="store_true", help="fit the histogram, or the detector rate to the target FWHM")

    ct = sub.add_parser("counts", parents=[common], help="singles, coincidences and CAR versus pump power")
    ct.add_argument("--powers", type=_floats, help="pump powers in mW, e.g. 50,100,200")
    ct.add_argument("--expectation", action="store_true", help="noise-free expected rates instead of simulation")

    m = sub.add_parser("michelson", parents=[common], help="single-photon Michelson visibility decay")
    m.add_argument("--L", type=_floats, help="path differences in m, e.g. 0,0.1,0.2")
    m.add_argument("--fit", action="store_true", help="fit linewidth and background ratio")

    q = sub.add_parser("qpm", parents=[common], help="poling period and gain envelope")
    q.add_argument("--order", type=int, help="QPM order (odd)")
    return p


COMMANDS = {
    "cluster": cmd_cluster,
    "g2": cmd_g2,
    "counts": cmd_counts,
    "michelson": cmd_michelson,
    "qpm": cmd_qpm,
}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        cfg = config_mod.load(args.config, args.preset)
        out = _out_dir(args, cfg)
        COMMANDS[args.command](args, cfg, out)
    except (ConfigError, DomainError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (NoSolutionError, FitError, NotConverged) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_COMPUTE
    except Exception as exc:  # noqa: BLE001
        print(f"internal error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INTERNAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
