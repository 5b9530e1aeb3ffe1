"""Command-line entry point: ``mmudn {blockage,se,optimize,sweep}``.

Every CSV is written next to a ``.manifest.json`` that records the config
snapshot, seed, tool version and output digests.  CSV files themselves carry
no timestamps, so identical inputs give byte-identical files.

Exit codes: 0 success, 1 invalid input, 2 numerical failure, 3 infeasible
optimization.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
from dataclasses import replace
from datetime import datetime, timezone
from pathlib import Path

from . import __version__, analytic
from .allocator import (
    SpectralEfficiencies,
    cp_log_epsilon,
    optimize_closed_form,
    optimize_numeric,
    papr_inversion,
)
from .blockage import (
    SEOUL_DISTRICTS,
    BuildingStats,
    LosDistanceEstimator,
    district_stats,
    ingest_buildings,
    ingest_table,
    read_building_csv,
    read_geojson,
)
from .channel import ALL_LINKS, Link
from .config import PRESETS, ConfigError, NetworkConfig
from .geometry import DensityConfig
from .montecarlo import ExperimentPlan, SWEEP_COLUMNS, analytic_columns, convergence_sweep, estimate_se, rows_to_csv

EXIT_OK, EXIT_INPUT, EXIT_NUMERIC, EXIT_INFEASIBLE = 0, 1, 2, 3

SE_COLUMNS = ("lambda_hat", "link", "mode") + SWEEP_COLUMNS[2:]
OPT_COLUMNS = ("w_m_hz", "zeta", "w_mu_ul_hz", "w_m_ul_hz", "rate_dl", "rate_ul", "ratio", "clamped", "feasible",
               "cp_variant", "se_source")

log = logging.getLogger("mmudn")


class InfeasibleError(RuntimeError):
    pass


def _floats(text: str) -> list[float]:
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _u64(text: str) -> int:
    value = int(text, 0)
    if not 0 <= value < 2**64:
        raise argparse.ArgumentTypeError("seed must fit in 64 unsigned bits")
    return value


def _resolve_config(args) -> tuple[NetworkConfig, object]:
    preset = PRESETS[args.preset] if getattr(args, "preset", None) else None
    if args.config:
        cfg = NetworkConfig.load(args.config)
    elif preset is not None:
        cfg = preset.config
    else:
        cfg = NetworkConfig()
    overrides = {"seed": args.seed}
    if getattr(args, "n_realizations", None) is not None:
        overrides["n_realizations"] = args.n_realizations
    if getattr(args, "cp_variant", None):
        overrides["cp_variant"] = args.cp_variant
    if getattr(args, "delta_mode", None):
        overrides["delta_mode"] = args.delta_mode
    return cfg.with_overrides(**overrides), preset


def _scale(row: dict, units: str) -> dict:
    if units == "nats":
        return row
    out = dict(row)
    for key in ("mean_nats", "stderr", "lower_bound", "upper_bound", "asymptote"):
        if key in out:
            out[key] = out[key] / math.log(2)
    return out


def _write(out_dir: Path, name: str, body: str, cfg: NetworkConfig, command: list[str], extra: dict) -> Path:
    out_dir.mkdir(parents=True, exist_ok=True)
    path = out_dir / name
    path.write_text(body)
    manifest = {
        "tool": "mmudn",
        "version": __version__,
        "command": command,
        "seed": cfg.seed,
        "config_sha256": cfg.digest(),
        "config": cfg.to_text(),
        "created_utc": datetime.now(timezone.utc).isoformat(),
        "outputs": {name: hashlib.sha256(body.encode()).hexdigest()},
        **extra,
    }
    (out_dir / (name + ".manifest.json")).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path


def _header(cfg: NetworkConfig, extra: dict) -> str:
    lines = [f"mmudn {__version__}", f"config_sha256: {cfg.digest()}", f"seed: {cfg.seed}"]
    lines += [f"{k}: {v}" for k, v in sorted(extra.items())]
    return "\n".join(lines)


# --- blockage ---------------------------------------------------------------

def cmd_blockage(args) -> int:
    if args.district:
        stats = district_stats(args.district)
    elif args.stats:
        stats = BuildingStats.from_text(Path(args.stats).read_text())
    elif args.geojson or args.csv:
        if args.region_area is None:
            raise ConfigError("--region-area is required with building data")
        if args.geojson:
            stats = ingest_buildings(read_geojson(args.geojson), args.region_area, args.floor_height)
        else:
            stats = ingest_table(*read_building_csv(args.csv), args.region_area, args.floor_height)
    else:
        raise ConfigError("give one of --geojson, --csv, --stats or --district")
    est = LosDistanceEstimator.from_stats(stats)
    text = stats.to_text() + f"beta = {est.beta_!r}\neta = {est.eta_!r}\nr_los = {est.r_los_!r}\n"
    sys.stdout.write(text)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "building_stats.txt").write_text(stats.to_text())
        (out / "blockage_report.txt").write_text(text)
    return EXIT_OK


# --- se -----------------------------------------------------------------------

def se_rows(cfg: NetworkConfig, lambda_hats, modes, links=ALL_LINKS) -> list[dict]:
    """One row per (lambda_hat, link, mode) with both BS densities at ``lambda_hat * lambda_u``."""
    channel = cfg.channel()
    rows = []
    for lh in lambda_hats:
        dens = DensityConfig.from_ratios(lh, lh, cfg.lambda_u)
        mc = None
        if "montecarlo" in modes:
            plan = ExperimentPlan(dens, channel, cfg.n_realizations, cfg.seed, links,
                                  cfg.window() if cfg.half_width is not None else None)
            mc = estimate_se(plan)
        exact_mu = analytic.se_exact_muw(lh, cfg.alpha_mu) if "exact" in modes else None
        for link in links:
            link = Link(link)
            cols = analytic_columns(link, dens, channel)
            for mode in modes:
                row = {"lambda_hat": lh, "link": link.value, "mode": mode, **cols,
                       "stderr": 0.0, "n": 0, "n_zero": 0, "n_capped": 0}
                if mode == "analytic":
                    row["mean_nats"] = cols["asymptote"]
                elif mode == "exact":
                    # the double-integral form exists for the microwave tier only
                    row["mean_nats"] = exact_mu if link.tier == "muw" else math.nan
                else:
                    e = mc[link]
                    row.update(mean_nats=e.mean, stderr=e.stderr, n=e.n_samples, n_zero=e.n_zero_samples,
                               n_capped=e.n_capped)
                rows.append(row)
    return rows


def cmd_se(args) -> int:
    cfg, preset = _resolve_config(args)
    lambda_hats = args.lambda_hats or (list(preset.lambda_hats) if preset else [10.0, 100.0, 1000.0])
    links = tuple(Link(x) for x in (preset.links if preset else ALL_LINKS))
    modes = ["analytic", "exact", "montecarlo"] if args.mode == "all" else [args.mode]
    rows = [_scale(r, args.units) for r in se_rows(cfg, lambda_hats, modes, links)]
    extra = {"units": args.units, "modes": ",".join(modes)}
    body = rows_to_csv(rows, SE_COLUMNS, _header(cfg, extra))
    _write(Path(args.out), "se.csv", body, cfg, args.argv, extra)
    return EXIT_OK


def cmd_sweep(args) -> int:
    cfg, preset = _resolve_config(args)
    lambda_hats = args.lambda_hats or (list(preset.lambda_hats) if preset else [10.0, 30.0, 100.0])
    links = tuple(Link(x) for x in (preset.links if preset else ALL_LINKS))
    base = ExperimentPlan(cfg.densities, cfg.channel(), cfg.n_realizations, cfg.seed, links,
                          cfg.window() if cfg.half_width is not None else None)
    rows = [_scale(r, args.units) for r in convergence_sweep(base, lambda_hats)]
    extra = {"units": args.units}
    body = rows_to_csv(rows, SWEEP_COLUMNS, _header(cfg, extra))
    _write(Path(args.out), "sweep.csv", body, cfg, args.argv, extra)
    return EXIT_OK


# --- optimize -------------------------------------------------------------------

def spectral_efficiencies(cfg: NetworkConfig, source: str) -> SpectralEfficiencies:
    dens = cfg.densities
    ch = cfg.channel()
    if source == "asymptotic":
        return SpectralEfficiencies.asymptotic(dens.lambda_hat_m, dens.lambda_hat_mu, dens.lambda_m,
                                               cfg.alpha_m, cfg.alpha_mu, ch.los.r_los)
    if source == "montecarlo":
        est = estimate_se(ExperimentPlan(dens, ch, cfg.n_realizations, cfg.seed))
        return SpectralEfficiencies(est[Link.MUW_DL].mean, est[Link.MUW_UL].mean, est[Link.MMW_DL].mean,
                                    est[Link.MMW_UL].mean)
    mm = analytic.se_bounds_mmw(dens.lambda_hat_m, dens.lambda_m, cfg.alpha_m, cfg.theta, ch.los.r_los).midpoint
    if source == "exact":
        mu = analytic.se_exact_muw(dens.lambda_hat_mu, cfg.alpha_mu)
    else:
        mu = analytic.se_bounds_muw(dens.lambda_hat_mu, cfg.alpha_mu).midpoint
    return SpectralEfficiencies(mu, mu, mm, mm)


def optimize_rows(cfg: NetworkConfig, w_m_list, zeta_list, source: str = "asymptotic") -> list[dict]:
    se = None if source == "asymptotic" else spectral_efficiencies(cfg, source)
    dens = cfg.densities
    rows = []
    for w_m in w_m_list:
        for zeta in zeta_list:
            point = replace(cfg, w_m=float(w_m), zeta=float(zeta))
            spec = point.spectrum
            if se is None:
                res = optimize_closed_form(spec, dens.lambda_hat_m, dens.lambda_hat_mu, dens.lambda_m,
                                           cfg.alpha_m, cfg.alpha_mu, point.los_model().r_los, cfg.cp_variant)
            else:
                res = optimize_numeric(spec, se, cfg.cp_variant)
            rows.append({"w_m_hz": float(w_m), "zeta": float(zeta), "w_mu_ul_hz": res.w_mu_ul,
                         "w_m_ul_hz": res.w_m_ul, "rate_dl": res.rate_dl, "rate_ul": res.rate_ul,
                         "ratio": res.ratio, "clamped": res.clamped, "feasible": res.feasible,
                         "cp_variant": res.cp_variant, "se_source": source})
    return rows


def cmd_optimize(args) -> int:
    cfg, preset = _resolve_config(args)
    w_m_list = args.w_m_list or (list(preset.w_m_list) if preset else [cfg.w_m])
    zeta_list = args.zeta_list or (list(preset.zeta_list) if preset else [cfg.zeta])
    rows = optimize_rows(cfg, w_m_list, zeta_list, args.se_source)
    spec = cfg.spectrum
    extra = {
        "cp_variant": cfg.cp_variant,
        "delta_mode": cfg.delta_mode,
        "delta_linear": repr(cfg.delta),
        "w_m_ul_inversion_hz": repr(papr_inversion(spec.f_s, spec.delta, spec.epsilon)),
        "w_m_ul_log_epsilon_hz": repr(cp_log_epsilon(spec.f_s, spec.delta, spec.epsilon)),
        "se_source": args.se_source,
    }
    body = rows_to_csv(rows, OPT_COLUMNS, _header(cfg, extra))
    _write(Path(args.out), "optimize.csv", body, cfg, args.argv, extra)
    if rows and not any(r["feasible"] for r in rows):
        raise InfeasibleError("no feasible allocation in the requested sweep")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mmudn", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="scenario config file")
    common.add_argument("--seed", type=_u64, help="64-bit experiment seed")
    common.add_argument("--out", default="out", help="output directory")
    common.add_argument("--preset", choices=sorted(PRESETS))
    common.add_argument("--units", choices=("nats", "bits"), default="nats")
    common.add_argument("--n-realizations", type=int)

    p = sub.add_parser("blockage", help="building statistics -> average LOS distance")
    src = p.add_mutually_exclusive_group()
    src.add_argument("--geojson")
    src.add_argument("--csv")
    src.add_argument("--stats", help="flat key-value BuildingStats file")
    src.add_argument("--district", choices=sorted(SEOUL_DISTRICTS))
    p.add_argument("--region-area", type=float, help="surveyed area in m^2")
    p.add_argument("--floor-height", type=float, default=3.0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_blockage)

    p = sub.add_parser("se", parents=[common], help="spectral efficiency versus density ratio")
    p.add_argument("--mode", choices=("analytic", "exact", "montecarlo", "all"), default="analytic")
    p.add_argument("--lambda-hats", type=_floats)
    p.set_defaults(func=cmd_se)

    p = sub.add_parser("sweep", parents=[common], help="Monte Carlo convergence sweep")
    p.add_argument("--lambda-hats", type=_floats)
    p.add_argument("--mode", choices=("montecarlo",), default="montecarlo")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("optimize", parents=[common], help="microwave UL/DL allocation")
    p.add_argument("--w-m-list", type=_floats, help="mmW bandwidths in Hz")
    p.add_argument("--zeta-list", type=_floats)
    p.add_argument("--se-source", choices=("asymptotic", "bounds", "exact", "montecarlo"), default="asymptotic")
    p.add_argument("--cp-variant", choices=("inversion", "log-epsilon"))
    p.add_argument("--delta-mode", choices=("db", "raw"))
    p.add_argument("--mode", choices=("closed-form",), default="closed-form", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_optimize)
    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    args.argv = argv
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except InfeasibleError as exc:
        log.error("%s", exc)
        return EXIT_INFEASIBLE
    except (analytic.QuadratureError, FloatingPointError, ZeroDivisionError) as exc:
        log.error("numerical failure: %s", exc)
        return EXIT_NUMERIC
    except (ConfigError, ValueError, KeyError, OSError) as exc:
        log.error("%s", exc)
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
