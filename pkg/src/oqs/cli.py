"""``oqs`` command line interface.

Subcommands::

    oqs run      --config FILE --out FILE
    oqs sweep    --config FILE --param NAME --from F --to T --step S --out-dir DIR [--jobs J]
    oqs classify --config FILE
    oqs oracle   --config FILE [--modes N] [--omega-max W] [--max-exc M] [--scaling] [--check-leakage]
    oqs rates    --config FILE --omega V1,V2,...

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 oracle size cap or truncation leakage.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

import numpy as np

from .config import (
    SWEEP_TARGETS,
    ConfigError,
    ScenarioConfig,
    build_scenario,
    evolution_config,
    load_config,
    parse_config,
    sweep_values,
)
from .evolution import EvolutionConfig, NumericalInstabilityError, Trajectory, evolve
from .initial_state import classify
from .lindblad import occupation_profile, rates_at
from .oracle import OracleCapError, TruncationLeakageError, compare, exact_reduced_dynamics, leakage_check

log = logging.getLogger("oqs")

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_NUMERICAL = 3
EXIT_ORACLE = 4

ORACLE_SPACING = 0.1


def fmt(x: float) -> str:
    """9 significant digits, locale independent."""
    # adding 0.0 turns a negative zero into a positive one
    return "{:.9g}".format(float(x) + 0.0)


def csv_lines(header: list[str], rows) -> str:
    out = [",".join(header)]
    out.extend(",".join(fmt(v) for v in row) for row in rows)
    return "\n".join(out) + "\n"


def trajectory_csv(traj: Trajectory) -> str:
    d = traj.rho.shape[1]
    header = ["t"] + [f"pop_{i}" for i in range(d)] + ["sigma_z", "entropy", "rate", "trace_err"]
    rows = (
        [t, *pops, sz, s, r, e]
        for t, pops, sz, s, r, e in zip(
            traj.times, traj.populations, traj.sigma_z, traj.entropy, traj.rate, traj.trace_err
        )
    )
    return csv_lines(header, rows)


def run_config(cfg: ScenarioConfig) -> Trajectory:
    system, bath, state = build_scenario(cfg)
    return evolve(state, system, bath, evolution_config(cfg))


# ---------------------------------------------------------------------------
# subcommands
# ---------------------------------------------------------------------------


def cmd_run(args) -> int:
    cfg = load_config(args.config)
    traj = run_config(cfg)
    Path(args.out).write_text(trajectory_csv(traj))
    log.info("wrote %d rows to %s", len(traj), args.out)
    return EXIT_OK


def _sweep_one(job):
    cfg_dict, path = job
    traj = run_config(parse_config(cfg_dict))
    Path(path).write_text(trajectory_csv(traj))
    return path


def cmd_sweep(args) -> int:
    cfg = load_config(args.config)
    if args.param not in SWEEP_TARGETS:
        raise ConfigError(f"--param: must be one of {', '.join(SWEEP_TARGETS)}")
    values = sweep_values(args.start, args.stop, args.step)
    section, key = SWEEP_TARGETS[args.param]
    out_dir = Path(args.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    jobs, index = [], []
    for i, value in enumerate(values):
        data = cfg.to_dict()
        data[section][key] = value
        parse_config(data)  # validate every point before running any
        name = f"{args.param}_{i:03d}.csv"
        jobs.append((data, str(out_dir / name)))
        index.append((value, name))
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            list(pool.map(_sweep_one, jobs))
    else:
        for job in jobs:
            _sweep_one(job)
    lines = ["value,filename"] + [f"{fmt(v)},{name}" for v, name in index]
    (out_dir / "sweep_index.csv").write_text("\n".join(lines) + "\n")
    log.info("sweep of %s: %d runs in %s", args.param, len(values), out_dir)
    return EXIT_OK


def cmd_classify(args) -> int:
    cfg = load_config(args.config)
    _, _, state = build_scenario(cfg)
    c = classify(state)
    print(c.report)
    block = {
        "SL": c.is_SL,
        "NSL": c.is_NSL,
        "equilibrium": c.all_bath_equilibrium,
        "lindblad": c.lindblad_in_markov_secular,
        "violations": {
            (state.terms[i].label or f"term {i}"): items for i, items in sorted(c.violations.items())
        },
    }
    print("--- json ---")
    print(json.dumps(block, indent=2))
    return EXIT_OK


def _oracle_distance(cfg: ScenarioConfig, max_exc: int, stride: int, check_leakage: bool):
    system, bath, state = build_scenario(cfg)
    base = evolution_config(cfg)
    ecfg = EvolutionConfig(base.dt, base.t_max, stride, base.reduced_path)
    traj = evolve(state, system, bath, ecfg)
    exact = exact_reduced_dynamics(state, system, bath, traj.times, max_exc)
    if check_leakage:
        change = leakage_check(state, system, bath, traj.times, max_exc)
        print(f"# leakage (max_exc {max_exc} -> {max_exc + 1}): {change:.3e}", file=sys.stderr)
    return traj.times, compare(traj.rho, traj.times, exact)


def cmd_oracle(args) -> int:
    data = load_config(args.config).to_dict()
    data["bath"]["n_modes"] = args.modes
    data["bath"]["omega_max"] = args.omega_max
    cfg = parse_config(data)
    stride = args.stride or max(1, int(round(ORACLE_SPACING / cfg.evolve.dt)))
    times, (dmax, series) = _oracle_distance(cfg, args.max_exc, stride, args.check_leakage)
    text = csv_lines(["t", "trace_distance"], zip(times, series))
    text += f"# max_trace_distance={fmt(dmax)}\n"
    if args.scaling:
        half = cfg.with_value("bath", "alpha", cfg.bath.alpha / 2)
        _, (dhalf, _) = _oracle_distance(half, args.max_exc, stride, False)
        factor = dmax / dhalf if dhalf > 0 else float("inf")
        text += f"# max_trace_distance_half_alpha={fmt(dhalf)}\n# scaling_factor={fmt(factor)}\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_rates(args) -> int:
    cfg = load_config(args.config)
    try:
        omegas = [float(v) for v in args.omega.split(",") if v.strip()]
    except ValueError:
        raise ConfigError(f"--omega: cannot parse {args.omega!r}") from None
    if not omegas:
        raise ConfigError("--omega: no frequencies given")
    w_max = cfg.bath.omega_max
    for w in omegas:
        if not 0 < w < w_max:
            raise ConfigError(f"--omega: {w} outside (0, {w_max})")
    system, bath, state = build_scenario(cfg)
    c = classify(state)
    if not c.lindblad_in_markov_secular:
        log.warning("initial state does not satisfy the Lindblad condition; Markov rates are indicative only")
    occ = occupation_profile(state, bath.frequencies)
    re, im, bre, _ = rates_at(bath.density, omegas, w_max, occ)
    text = csv_lines(["omega", "re_gamma", "im_gamma", "re_gamma_b_eq"], zip(omegas, re, im, bre))
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="oqs", description="Weak-coupling master equation with correlated initial states.")
    p.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = p.add_subparsers(dest="command", required=True)

    r = sub.add_parser("run", help="integrate one scenario and write a CSV trajectory")
    r.add_argument("--config", required=True)
    r.add_argument("--out", required=True)
    r.set_defaults(func=cmd_run)

    s = sub.add_parser("sweep", help="run a scenario for a range of one parameter")
    s.add_argument("--config", required=True)
    s.add_argument("--param", required=True, choices=sorted(SWEEP_TARGETS))
    s.add_argument("--from", dest="start", type=float, required=True)
    s.add_argument("--to", dest="stop", type=float, required=True)
    s.add_argument("--step", type=float, required=True)
    s.add_argument("--out-dir", required=True)
    s.add_argument("--jobs", type=int, default=1, help="parallel worker processes")
    s.set_defaults(func=cmd_sweep)

    c = sub.add_parser("classify", help="print SL/NSL, equilibrium and Lindblad verdicts")
    c.add_argument("--config", required=True)
    c.set_defaults(func=cmd_classify)

    o = sub.add_parser("oracle", help="compare against exact truncated-Fock evolution")
    o.add_argument("--config", required=True)
    o.add_argument("--modes", type=int, default=30)
    o.add_argument("--omega-max", type=float, default=10.0)
    o.add_argument("--max-exc", type=int, default=2)
    o.add_argument("--stride", type=int, default=0, help="record stride (default: every 0.1 time units)")
    o.add_argument("--scaling", action="store_true", help="also run at alpha/2 and report the ratio")
    o.add_argument("--check-leakage", action="store_true", help="compare with max_exc + 1")
    o.add_argument("--out", default=None)
    o.set_defaults(func=cmd_oracle)

    q = sub.add_parser("rates", help="Markov decay rates and Lamb-shift integrals")
    q.add_argument("--config", required=True)
    q.add_argument("--omega", required=True, help="comma separated frequencies")
    q.add_argument("--out", default=None)
    q.set_defaults(func=cmd_rates)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    try:
        return args.func(args)
    except (ConfigError, FileNotFoundError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OracleCapError, TruncationLeakageError) as exc:
        print(f"oracle error: {exc}", file=sys.stderr)
        return EXIT_ORACLE
    except NumericalInstabilityError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (ValueError, np.linalg.LinAlgError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_CONFIG if isinstance(exc, ValueError) else EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
