"""
Command-line entry point of the RCP two-delay toolkit

Every subcommand writes one CSV with a header row and a key=value metadata
sidecar (<out>.meta) holding the command, the resolved parameters, the seed
and the tool version.
"""
import argparse
import json
import math
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import numpy as np
import pandas as pd
from dotenv import dotenv_values

sys.path.append(str(Path(__file__).parent.parent))
from config.config import (
    DEFAULT_CAPACITY, DEFAULT_GAMMA, DEFAULT_SEED, DEFAULT_SIGMA_SQ, OUTPUT_DIR,
    REFERENCE_SETS_FILE, SHOW_PROGRESS,
)
from src import __version__
from src.errors import ConsistencyError, NumericalError, ParameterError
from src.fluid_sim import OutcomeKind, SimConfig, amplitude_sweep, integrate
from src.hopf import analyze, criticality_map, f_tilde, predicted_amplitude
from src.model import ModelParams, rho_to_b, utilization_from_b
from src.packet_sim import NetworkConfig, RTT_ASSIGNMENTS, gbps_to_packets_per_ms, run
from src.packet_sim import oscillation_metrics
from src.stability import chart_boundary_a, chart_margin, critical_kappa, is_stable

EXIT_OK, EXIT_USAGE, EXIT_NUMERICAL = 0, 2, 3
BOUNDARY_TOL = 1e-12

CSV_COLUMNS = {
    "stability-chart": ["kind", "a", "b", "rho_star", "margin", "stable", "on_boundary"],
    "hopf-classify": ["label", "a", "b", "gamma", "capacity", "tau1", "tau2", "rho_star",
                      "kappa_c", "omega0", "theta", "alpha_prime", "mu2", "beta2",
                      "criticality"],
    "ftilde-curve": ["theta", "f_tilde"],
    "mu2-curves": ["theta", "rho_star", "b", "mu2", "criticality"],
    "bifurcation-sweep": ["kappa", "amplitude", "period", "outcome", "predicted_amplitude"],
    "simulate-fluid": ["t", "R", "p"],
    "simulate-packets": ["t_ms", "queue_pkts", "router_rate_pkts_per_ms", "arrivals_per_ms"],
}

MODEL_KEYS = ("a", "b", "gamma", "capacity", "tau1", "tau2", "kappa", "sigma_sq")
SKIPPED_META = ("handler", "config", "command")


def _schema_epilog() -> str:
    lines = ["CSV schemas:"]
    for command, columns in CSV_COLUMNS.items():
        lines.append(f"  {command:<18} {','.join(columns)}")
    lines.append("  (simulate-fluid writes the p column only when b > 0)")
    return "\n".join(lines)


def _require(args, *names):
    missing = [f"--{name.replace('_', '-')}" for name in names if getattr(args, name) is None]
    if missing:
        raise ParameterError(f"missing required value(s): {', '.join(missing)}")


def _progress(args) -> bool:
    return SHOW_PROGRESS and not args.no_progress


def model_params(args) -> ModelParams:
    """ModelParams from the shared model flags; --rho-star overrides --b"""
    _require(args, "a", "tau1", "tau2")
    b = args.b
    if args.rho_star is not None:
        b = rho_to_b(args.rho_star, args.sigma_sq)
    return ModelParams(a=args.a, b=b, gamma=args.gamma, capacity=args.capacity,
                       tau1=args.tau1, tau2=args.tau2, kappa=args.kappa,
                       sigma_sq=args.sigma_sq)


def _resolved(params: ModelParams) -> Dict[str, Any]:
    return {name: getattr(params, name) for name in MODEL_KEYS}


def cmd_stability_chart(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Grid of the κ = 1 sufficient condition plus its boundary curve"""
    if args.resolution < 2:
        raise ParameterError(f"resolution must be >= 2 (got {args.resolution})")
    if not 0 <= args.a_min < args.a_max or not 0 <= args.b_min < args.b_max:
        raise ParameterError("ranges must satisfy 0 <= min < max")

    a_axis = np.linspace(args.a_min, args.a_max, args.resolution)
    b_axis = np.linspace(args.b_min, args.b_max, args.resolution)
    rows = []
    for b in b_axis:
        rho = utilization_from_b(b * args.sigma_sq)
        for a in a_axis:
            margin = chart_margin(a, b, args.sigma_sq)
            rows.append({"kind": "grid", "a": a, "b": b, "rho_star": rho, "margin": margin,
                         "stable": margin < 0.0, "on_boundary": abs(margin) <= BOUNDARY_TOL})
    for b in b_axis:
        rows.append({"kind": "boundary", "a": chart_boundary_a(b, args.sigma_sq), "b": b,
                     "rho_star": utilization_from_b(b * args.sigma_sq), "margin": 0.0,
                     "stable": False, "on_boundary": True})

    frame = pd.DataFrame(rows, columns=CSV_COLUMNS["stability-chart"])
    stable_share = frame.loc[frame["kind"] == "grid", "stable"].mean()
    print(f"[INFO] Grid {args.resolution}x{args.resolution}, stable share {stable_share:.3f}")
    return frame, {}


def load_reference_sets(path: Path = REFERENCE_SETS_FILE) -> List[Dict[str, Any]]:
    try:
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)
    except (OSError, json.JSONDecodeError) as e:
        raise ParameterError(f"cannot read reference sets {path}: {e}") from e


def cmd_hopf_classify(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """κc, ω0, ϑ, α'(0), μ2, β2 and the criticality verdict"""
    if args.reference:
        entries = load_reference_sets()
        labelled = [(entry.get("label", f"set{i}"),
                     ModelParams(**{k: entry[k] for k in MODEL_KEYS if k in entry}),
                     entry) for i, entry in enumerate(entries)]
    else:
        labelled = [("flags", model_params(args), {})]

    rows = []
    print("\n" + "=" * 80)
    print("Hopf Classification")
    print("=" * 80)
    for label, params, entry in labelled:
        _, eq, hp, nf = analyze(params)
        rows.append({
            "label": label, "a": params.a, "b": params.b, "gamma": params.gamma,
            "capacity": params.capacity, "tau1": params.tau1, "tau2": params.tau2,
            "rho_star": eq.rho_star, "kappa_c": hp.kappa_c, "omega0": hp.omega0,
            "theta": hp.theta, "alpha_prime": hp.alpha_prime, "mu2": nf.mu2,
            "beta2": nf.beta2, "criticality": nf.criticality.value,
        })
        print(f"{label}: kappa_c={hp.kappa_c:.4f} omega0={hp.omega0:.5f} "
              f"theta/pi={hp.theta / math.pi:.4f} mu2={nf.mu2:.6g} beta2={nf.beta2:.6g} "
              f"-> {nf.criticality.value}")

        expected_kc = entry.get("expected_kappa_c")
        if expected_kc is not None and abs(hp.kappa_c - expected_kc) > 0.005:
            print(f"[WARNING] {label}: kappa_c {hp.kappa_c:.4f} differs from {expected_kc}")
        expected_kind = entry.get("expected_criticality")
        if expected_kind is not None and expected_kind != nf.criticality.value:
            print(f"[WARNING] {label}: verdict {nf.criticality.value}, expected {expected_kind}")
    print("=" * 80)

    extra = {} if args.reference else _resolved(labelled[0][1])
    return pd.DataFrame(rows, columns=CSV_COLUMNS["hopf-classify"]), extra


def cmd_ftilde_curve(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    if args.points < 2:
        raise ParameterError(f"points must be >= 2 (got {args.points})")
    thetas = math.pi * np.linspace(0.001, 0.999, args.points)
    values = [f_tilde(float(t)) for t in thetas]
    return pd.DataFrame({"theta": thetas, "f_tilde": values}), {}


def cmd_mu2_curves(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """μ2 against ϑ at fixed ρ*, or against ρ* at fixed ϑ"""
    if args.points < 2:
        raise ParameterError(f"points must be >= 2 (got {args.points})")
    if args.mode == "theta-sweep":
        fixed = 0.9 if args.fixed is None else args.fixed
        theta_grid = math.pi * np.linspace(0.01, 0.99, args.points)
        frame = criticality_map(theta_grid, rho_grid=[fixed], a=args.a,
                                capacity=args.capacity, progress=_progress(args))
    else:
        fixed = math.pi / 3 if args.fixed is None else args.fixed
        rho_grid = np.linspace(0.01, 0.99, args.points)
        frame = criticality_map([fixed], rho_grid=rho_grid, a=args.a,
                                capacity=args.capacity, progress=_progress(args))
    frame = frame.sort_values(["theta", "rho_star"], kind="stable").reset_index(drop=True)
    counts = frame["criticality"].value_counts().to_dict()
    print(f"[INFO] {args.mode} at fixed {fixed:.6g}: {counts}")
    return frame, {"fixed_resolved": fixed}


def cmd_bifurcation_sweep(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Steady rate amplitude against κ across κc"""
    params = model_params(args)
    _, _, hp, nf = analyze(params)
    k_lo = 0.9 * hp.kappa_c if args.kappa_min is None else args.kappa_min
    k_hi = 1.1 * hp.kappa_c if args.kappa_max is None else args.kappa_max
    print(f"[INFO] kappa_c={hp.kappa_c:.6g} ({nf.criticality.value}), "
          f"sweeping [{k_lo:.4g}, {k_hi:.4g}] with {args.points} points")

    points = amplitude_sweep(params, (k_lo, k_hi), args.points, t_end=args.t_end, dt=args.dt,
                             workers=args.workers, progress=_progress(args))
    rows = []
    for point in points:
        predicted = predicted_amplitude(nf, hp, point.kappa)
        rows.append({"kappa": point.kappa, "amplitude": point.amplitude, "period": point.period,
                     "outcome": point.outcome.value,
                     "predicted_amplitude": np.nan if predicted is None else predicted})
        if point.outcome is OutcomeKind.INCONCLUSIVE:
            print(f"[WARNING] kappa={point.kappa:.5g}: inconclusive, consider a longer --t-end")

    extra = _resolved(params)
    extra.update({"kappa_c": hp.kappa_c, "kappa_min_resolved": k_lo, "kappa_max_resolved": k_hi})
    return pd.DataFrame(rows, columns=CSV_COLUMNS["bifurcation-sweep"]), extra


def cmd_simulate_fluid(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Rate trace (and queue proxy when b > 0) of one fluid run"""
    if args.sample_every < 1:
        raise ParameterError(f"sample-every must be >= 1 (got {args.sample_every})")
    params = model_params(args)
    config = SimConfig(params=params, t_end=args.t_end, dt=args.dt, history=args.history)
    resolved = config.resolved()
    trace = integrate(resolved)

    outcome = trace.outcome
    print(f"[INFO] Outcome: {outcome.kind.value} amplitude={outcome.amplitude:.6g} "
          f"period={outcome.period}")
    if outcome.kind is OutcomeKind.ESCAPED:
        print(f"[WARNING] Trajectory escaped at t={outcome.escape_time:.6g}")
    if trace.saturated:
        print(f"[WARNING] Queue term saturated on {trace.saturation_count} stages")

    step = args.sample_every
    data = {"t": trace.times[::step], "R": trace.rates[::step]}
    columns = ["t", "R"]
    if trace.queue is not None:
        data["p"] = trace.queue[::step]
        columns.append("p")

    extra = _resolved(params)
    extra.update({"dt_resolved": resolved.dt, "t_end_resolved": resolved.t_end,
                  "history_resolved": resolved.history, "outcome": outcome.kind.value,
                  "is_stable": is_stable(params).stable,
                  "kappa_c": critical_kappa(params).kappa_c})
    return pd.DataFrame(data, columns=columns), extra


def cmd_simulate_packets(args) -> Tuple[pd.DataFrame, Dict[str, Any]]:
    """Queue, router rate and measured load at every router update"""
    params = model_params(args)
    capacity = params.capacity
    if args.capacity_gbps is not None:
        capacity = gbps_to_packets_per_ms(args.capacity_gbps)
    config = NetworkConfig(
        a=params.a, tau1=params.tau1, tau2=params.tau2, b=params.b, gamma=params.gamma,
        kappa=params.kappa, capacity=capacity, n_sources=args.n_sources,
        rtt_assignment=args.rtt_assignment, update_interval=args.update_interval,
        sim_duration=args.duration, rng_seed=args.seed, initial_rate=args.initial_rate,
        sigma_sq=params.sigma_sq,
    ).resolved()
    print(f"[INFO] {config.n_sources} sources, C={config.capacity:.6g} pkts/ms, "
          f"update interval {config.update_interval:.6g} ms, seed {config.rng_seed}")

    result = run(config)
    stats = result.stats
    print(f"[INFO] Mean utilization {stats.mean_utilization:.4f}, "
          f"arrived {stats.packets_arrived}, departed {stats.packets_departed}")
    if stats.rate_clamps:
        print(f"[WARNING] Router rate clamped at the floor {stats.rate_clamps} times")
    if stats.overflow:
        print("[WARNING] Queue overflow, run stopped early")
    if len(result.times) >= 2:
        metrics = oscillation_metrics(result.queue_trace)
        print(f"[INFO] Queue (final half): mean {metrics.mean:.2f}, "
              f"peak-to-peak {metrics.peak_to_peak:.2f}")

    frame = pd.DataFrame({
        "t_ms": result.times,
        "queue_pkts": result.queue,
        "router_rate_pkts_per_ms": result.router_rate,
        "arrivals_per_ms": result.arrivals_per_ms,
    }, columns=CSV_COLUMNS["simulate-packets"])
    extra = {name: getattr(config, name) for name in (
        "a", "b", "gamma", "kappa", "capacity", "tau1", "tau2", "sigma_sq", "n_sources",
        "rtt_assignment", "update_interval", "sim_duration", "rng_seed", "initial_rate")}
    extra.update({"mean_utilization": stats.mean_utilization, "rate_clamps": stats.rate_clamps,
                  "overflow": stats.overflow})
    return frame, extra


def _add_common_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--out", type=str, default=None, help="Output CSV path")
    parser.add_argument("--seed", type=int, default=DEFAULT_SEED, help="Random seed")
    parser.add_argument("--config", type=str, default=None,
                        help="Flat key=value file; explicit flags override it")
    parser.add_argument("--no-progress", action="store_true", help="Disable progress bars")


def _add_model_flags(parser: argparse.ArgumentParser):
    parser.add_argument("--a", type=float, default=None, help="Rate-mismatch gain a")
    parser.add_argument("--b", type=float, default=0.0, help="Queue gain b (0 disables)")
    parser.add_argument("--rho-star", type=float, default=None,
                        help="Target utilization; sets b and overrides --b")
    parser.add_argument("--gamma", type=float, default=DEFAULT_GAMMA,
                        help="Target utilization without queue feedback")
    parser.add_argument("--capacity", type=float, default=DEFAULT_CAPACITY,
                        help="Link capacity C in packets/ms")
    parser.add_argument("--tau1", type=float, default=None, help="First RTT class (ms)")
    parser.add_argument("--tau2", type=float, default=None, help="Second RTT class (ms)")
    parser.add_argument("--kappa", type=float, default=1.0, help="Bifurcation parameter κ")
    parser.add_argument("--sigma-sq", type=float, default=DEFAULT_SIGMA_SQ,
                        help="Arrival variability σ² of the queue model")


def build_parser() -> Tuple[argparse.ArgumentParser, Dict[str, argparse.ArgumentParser]]:
    parser = argparse.ArgumentParser(
        description="Stability, Hopf and simulation experiments for RCP with two RTT classes",
        epilog=_schema_epilog(), formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)
    commands: Dict[str, argparse.ArgumentParser] = {}

    def add(name, handler, help_text):
        sub = subparsers.add_parser(
            name, help=help_text, description=help_text,
            epilog=f"CSV columns: {','.join(CSV_COLUMNS[name])}",
        )
        sub.set_defaults(handler=handler)
        _add_common_flags(sub)
        commands[name] = sub
        return sub

    sub = add("stability-chart", cmd_stability_chart, "κ = 1 stability chart over (a, b)")
    sub.add_argument("--a-min", type=float, default=0.0)
    sub.add_argument("--a-max", type=float, default=2.0)
    sub.add_argument("--b-min", type=float, default=0.0)
    sub.add_argument("--b-max", type=float, default=2.0)
    sub.add_argument("--resolution", type=int, default=101, help="Grid points per axis")
    sub.add_argument("--sigma-sq", type=float, default=DEFAULT_SIGMA_SQ)

    sub = add("hopf-classify", cmd_hopf_classify, "Critical κ and Hopf criticality")
    _add_model_flags(sub)
    sub.add_argument("--reference", action="store_true",
                     help="Classify the bundled reference parameter sets")

    sub = add("ftilde-curve", cmd_ftilde_curve, "Criticality function without queue feedback")
    sub.add_argument("--points", type=int, default=1000)

    sub = add("mu2-curves", cmd_mu2_curves, "μ2 against delay phase or utilization")
    sub.add_argument("--mode", choices=["theta-sweep", "rho-sweep"], default="theta-sweep")
    sub.add_argument("--fixed", type=float, default=None,
                     help="Fixed ρ* (theta-sweep, default 0.9) or ϑ (rho-sweep, default π/3)")
    sub.add_argument("--points", type=int, default=200)
    sub.add_argument("--a", type=float, default=1.0)
    sub.add_argument("--capacity", type=float, default=DEFAULT_CAPACITY,
                        help="Link capacity C in packets/ms; μ2 scales as 1/C², the verdict does not")

    sub = add("bifurcation-sweep", cmd_bifurcation_sweep, "Limit-cycle amplitude against κ")
    _add_model_flags(sub)
    sub.add_argument("--kappa-min", type=float, default=None, help="Default 0.9 κc")
    sub.add_argument("--kappa-max", type=float, default=None, help="Default 1.1 κc")
    sub.add_argument("--points", type=int, default=21)
    sub.add_argument("--t-end", type=float, default=None)
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--workers", type=int, default=1, help="Worker processes")

    sub = add("simulate-fluid", cmd_simulate_fluid, "Fluid-model rate trace")
    _add_model_flags(sub)
    sub.add_argument("--t-end", type=float, default=None)
    sub.add_argument("--dt", type=float, default=None)
    sub.add_argument("--history", type=float, default=None,
                     help="Constant initial history (default R*(1 + 0.01))")
    sub.add_argument("--sample-every", type=int, default=1, help="Keep every n-th sample")

    sub = add("simulate-packets", cmd_simulate_packets, "Packet-level bottleneck trace")
    _add_model_flags(sub)
    sub.add_argument("--capacity-gbps", type=float, default=None,
                     help="Capacity in Gbit/s with 1000-byte packets (overrides --capacity)")
    sub.add_argument("--n-sources", type=int, default=100)
    sub.add_argument("--rtt-assignment", choices=list(RTT_ASSIGNMENTS), default="half")
    sub.add_argument("--update-interval", type=float, default=None,
                     help="Router update interval Δ in ms (default mean RTT)")
    sub.add_argument("--duration", type=float, default=5000.0, help="Simulated ms")
    sub.add_argument("--initial-rate", type=float, default=None)

    return parser, commands


def _config_value(action: argparse.Action, key: str, raw: Optional[str]):
    if raw is None:
        raise ParameterError(f"config key {key!r} has no value")
    if isinstance(action, argparse._StoreTrueAction):
        return raw.strip().lower() in ("1", "true", "yes", "on")
    try:
        value = action.type(raw) if action.type else raw
    except ValueError as e:
        raise ParameterError(f"config key {key!r}: {e}") from e
    if action.choices is not None and value not in action.choices:
        raise ParameterError(f"config key {key!r} must be one of {list(action.choices)}")
    return value


def parse_arguments(argv: Optional[List[str]] = None) -> argparse.Namespace:
    """Parse flags, layering an optional --config file underneath them"""
    parser, commands = build_parser()
    args = parser.parse_args(argv)
    if not args.config:
        return args

    path = Path(args.config)
    if not path.is_file():
        raise ParameterError(f"config file not found: {path}")
    sub = commands[args.command]
    actions = {action.dest: action for action in sub._actions if action.dest != "help"}

    defaults = {}
    for key, raw in dotenv_values(path).items():
        dest = key.strip().lstrip("-").replace("-", "_")
        if dest == "config" or dest not in actions:
            raise ParameterError(f"unknown config key {key!r} for {args.command}")
        defaults[dest] = _config_value(actions[dest], key, raw)
    sub.set_defaults(**defaults)
    return parser.parse_args(argv)


def meta_path(out: Path) -> Path:
    return out.with_name(out.name + ".meta")


def write_outputs(frame: pd.DataFrame, args, extra: Dict[str, Any]) -> Path:
    out = Path(args.out) if args.out else OUTPUT_DIR / f"{args.command.replace('-', '_')}.csv"
    out.parent.mkdir(parents=True, exist_ok=True)
    frame.to_csv(out, index=False)

    meta = {"command": args.command, "version": __version__, "seed": args.seed}
    meta.update({k: v for k, v in vars(args).items() if k not in SKIPPED_META})
    meta.update(extra)
    with open(meta_path(out), "w", encoding="utf-8") as f:
        for key in sorted(meta):
            f.write(f"{key}={meta[key]}\n")
    print(f"[SUCCESS] {len(frame)} rows saved to {out}")
    return out


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = parse_arguments(argv)
    except SystemExit as e:
        return EXIT_OK if e.code in (None, 0) else EXIT_USAGE
    except ParameterError as e:
        print(f"[ERROR] {e}")
        return EXIT_USAGE

    try:
        frame, extra = args.handler(args)
        write_outputs(frame, args, extra)
    except ParameterError as e:
        print(f"[ERROR] Invalid parameters - {e}")
        return EXIT_USAGE
    except (NumericalError, ConsistencyError) as e:
        print(f"[ERROR] Numerical failure - {e}")
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
