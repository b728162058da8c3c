"""Command-line entry point: ``grantfree {simulate,bounds,min-l,verify-means}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import bounds, harness
from .errors import ConfigError, NumericError
from .system import SystemConfig

log = logging.getLogger("grantfree")

EXIT_CONFIG = 2
EXIT_NUMERIC = 3

# config-file keys accepted by ``simulate``; CLI flags override them
SIM_KEYS = {
    "n_users": int, "n_active": int, "code_len": int, "n_antennas": int, "n_slots": int,
    "n_trials": int, "seed": int, "snr_db": float, "noise_var": float, "power": float,
    "power_profile": str, "power_spread_db": float, "algorithms": None, "output_path": str,
    "output_format": str, "fixed_codes": bool, "threads": int,
}
SIM_DEFAULTS = {
    "n_users": 200, "n_active": 20, "code_len": 35, "n_antennas": 256, "n_slots": 50,
    "n_trials": 100, "seed": 0, "snr_db": 0.0, "power": 1.0, "power_profile": "equal",
    "power_spread_db": 6.0, "algorithms": "plain,omc,otd,full_csi", "output_format": "csv",
    "fixed_codes": False, "threads": 1,
}


def load_config(path) -> dict:
    """Read a flat key-value document (JSON or YAML, chosen by extension)."""
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(str(exc), field="config") from exc
    try:
        if path.suffix.lower() in (".yaml", ".yml"):
            import yaml

            data = yaml.safe_load(text) or {}
        else:
            data = json.loads(text)
    except Exception as exc:
        raise ConfigError(f"cannot parse {path}: {exc}", field="config") from exc
    if not isinstance(data, dict):
        raise ConfigError("expected a flat key-value mapping", field="config")
    unknown = sorted(set(data) - set(SIM_KEYS))
    if unknown:
        raise ConfigError(f"unknown keys {unknown}", field="config")
    return data


def _int_list(text: str) -> list:
    return [int(float(v)) for v in text.split(",") if v.strip()]


def _float_list(text: str) -> list:
    return [float(v) for v in text.split(",") if v.strip()]


def _add_scenario(p: argparse.ArgumentParser, sim: bool) -> None:
    # simulate leaves unset flags as None so config-file values survive
    def d(value):
        return None if sim else value

    g = p.add_argument_group("scenario")
    g.add_argument("--users", "-N", dest="n_users", type=int, default=d(200))
    g.add_argument("--active", "-K", dest="n_active", type=int, default=d(20))
    g.add_argument("--code-len", "-L", dest="code_len", type=int, default=d(35))
    g.add_argument("--antennas", "-M", dest="n_antennas", type=int, default=d(256))
    g.add_argument("--snr-db", dest="snr_db", type=float, default=d(0.0),
                   help="P / (L sigma_w^2) in dB")
    g.add_argument("--noise-var", dest="noise_var", type=float, default=None,
                   help="noise variance (overrides --snr-db)")
    g.add_argument("--power", type=float, default=d(1.0))
    g.add_argument("--seed", type=int, default=d(0))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="grantfree", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="Monte Carlo PoF per random access slot")
    p.add_argument("--config", help="JSON or YAML file of scenario keys")
    _add_scenario(p, sim=True)
    p.add_argument("--trials", dest="n_trials", type=int)
    p.add_argument("--slots", dest="n_slots", type=int)
    p.add_argument("--algorithms", help=f"comma list from {','.join(harness.ALGORITHMS)}")
    p.add_argument("--power-profile", dest="power_profile", choices=("equal", "uniform_db_spread"))
    p.add_argument("--power-spread-db", dest="power_spread_db", type=float)
    p.add_argument("--fixed-codes", dest="fixed_codes", action="store_const", const=True)
    p.add_argument("--threads", type=int)
    p.add_argument("--out", dest="output_path")
    p.add_argument("--format", dest="output_format", choices=("csv", "json"))

    p = sub.add_parser("bounds", help="evaluate PoF bounds over a parameter grid")
    p.add_argument("--kind", default="omc-large-m,otd-large-m",
                   help="comma list of omc, otd, omc-large-m, otd-large-m")
    p.add_argument("--large-system", action="store_true",
                   help="use the L=49510, M=50000, N=400000, K=40 |Lambda| sweep")
    p.add_argument("--L", dest="code_len", type=_int_list, default=[49510])
    p.add_argument("--M", dest="n_antennas", type=_float_list, default=[50000.0])
    p.add_argument("--N", dest="n_users", type=_int_list, default=[400000])
    p.add_argument("--K", dest="n_active", type=_int_list, default=[40])
    p.add_argument("--lambda", dest="lambda_size", type=_int_list, default=[0])
    p.add_argument("--k1", type=_int_list, default=None)
    p.add_argument("--p-min", dest="p_min", type=_float_list, default=[1.0])
    p.add_argument("--p-max", dest="p_max", type=_float_list, default=[1.0])
    p.add_argument("--noise-var", dest="noise_var", type=_float_list, default=[0.0])
    p.add_argument("--out", default=None)
    p.add_argument("--format", choices=("csv", "json"), default="csv")

    p = sub.add_parser("min-l", help="smallest code length meeting a target PoF")
    p.add_argument("--kind", required=True,
                   choices=("omc", "plain", "full-csi", "otd-small-lambda", "otd-large-lambda"))
    p.add_argument("--delta", type=float, required=True)
    p.add_argument("--N", dest="n_users", type=int, default=400000)
    p.add_argument("--K", dest="n_active", type=int, default=40)
    p.add_argument("--lambda", dest="lambda_size", type=int, default=0)
    p.add_argument("--p-min", dest="p_min", type=float, default=1.0)
    p.add_argument("--p-max", dest="p_max", type=float, default=1.0)

    p = sub.add_parser("verify-means", help="empirical vs closed-form statistic means")
    _add_scenario(p, sim=False)
    p.add_argument("--samples", type=int, default=20000)
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    return parser


def simulation_spec(args: argparse.Namespace) -> harness.ExperimentSpec:
    """Merge defaults, config file and CLI flags into an :class:`ExperimentSpec`."""
    values = dict(SIM_DEFAULTS)
    if args.config:
        values.update(load_config(args.config))
    for key in SIM_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            values[key] = flag
    algos = values["algorithms"]
    if isinstance(algos, str):
        algos = [a for a in algos.split(",") if a.strip()]
    try:
        return harness.ExperimentSpec.build(
            values["n_users"], values["n_active"], values["code_len"], values["n_antennas"],
            n_slots=values["n_slots"], snr_db=values["snr_db"], noise_var=values.get("noise_var"),
            power=values["power"], power_profile=values["power_profile"],
            power_spread_db=values["power_spread_db"], seed=values["seed"],
            algorithms=tuple(algos), n_trials=values["n_trials"],
            output_path=values.get("output_path"), output_format=values["output_format"],
            fixed_codes=bool(values["fixed_codes"]), threads=values["threads"],
        )
    except TypeError as exc:
        raise ConfigError(str(exc), field="config") from exc


def cmd_simulate(args) -> None:
    spec = simulation_spec(args)
    log.info("simulating %d trials x %d slots: %s", spec.n_trials, spec.n_slots,
             ",".join(spec.algorithms))
    results = harness.run_experiment(spec)
    text = harness.render(harness.results_table(results), harness.CSV_FIELDS, spec.output_format)
    harness.write_output(text, spec.output_path)


def cmd_bounds(args) -> None:
    kinds = [k for k in args.kind.split(",") if k]
    if args.large_system:
        grid = harness.large_system_grid()
    else:
        grid = {"code_len": args.code_len, "n_antennas": args.n_antennas, "n_users": args.n_users,
                "n_active": args.n_active, "lambda_size": args.lambda_size,
                "p_min": args.p_min, "p_max": args.p_max, "noise_var": args.noise_var}
        if args.k1 is not None:
            grid["k1"] = args.k1
    rows = harness.run_bound_sweep(kinds, grid)
    harness.write_output(harness.render(rows, harness.SWEEP_FIELDS, args.format), args.out)


def cmd_min_l(args) -> None:
    inputs = bounds.BoundInputs(args.n_users, args.n_active, args.lambda_size,
                                p_min=args.p_min, p_max=args.p_max, delta=args.delta)
    res = bounds.solve_measurement_inequality(args.kind, inputs)
    below = "n/a (domain floor)" if res.holds_below is None else str(res.holds_below)
    print(f"kind={res.kind} L={res.code_len} rhs={res.rhs:.9g} "
          f"holds(L)={res.holds} holds(L-1)={below}")


def cmd_verify_means(args) -> None:
    if args.noise_var is None:
        cfg = SystemConfig.from_snr(args.n_users, args.n_active, args.code_len, args.n_antennas,
                                    args.snr_db, power=args.power, seed=args.seed)
    else:
        cfg = SystemConfig(args.n_users, args.n_active, args.code_len, args.n_antennas,
                           powers=args.power, noise_var=args.noise_var, seed=args.seed)
    checks = harness.verify_means(cfg, args.samples)
    rows = [{"class": c.user_class, "empirical": c.empirical, "analytic": c.analytic,
             "rel_error": c.rel_error} for c in checks]
    print(harness.render(rows, ("class", "empirical", "analytic", "rel_error"), args.format), end="")


COMMANDS = {"simulate": cmd_simulate, "bounds": cmd_bounds, "min-l": cmd_min_l,
            "verify-means": cmd_verify_means}


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        COMMANDS[args.command](args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericError as exc:
        print(f"numeric error: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return 0


if __name__ == "__main__":
    sys.exit(main())
