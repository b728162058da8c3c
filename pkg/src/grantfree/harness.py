"""Seeded Monte Carlo runner, bound sweeps and output writers.

Every trial is one coherence interval: fresh codes (unless fixed), fresh
channels held for all slots, and fresh activity and noise per slot. All
algorithms see the same received matrices. Draws come from
:func:`grantfree.rng.stream` keyed by ``(seed, trial, slot, tag)``, so results
do not depend on worker count or scheduling.
"""
from __future__ import annotations

import csv
import io
import itertools
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import bounds as _bounds
from .baselines import somp, trivial_pursuit_slot
from .detectors import (ChannelKnowledge, compute_thresholds, correlate, full_csi_slot, omc_slot,
                        otd_slot, plain_slot, weighted_stats)
from .errors import ConfigError
from .rng import SHARED, stream
from .system import SystemConfig, draw_activity, gen_channels, gen_codes, power_profile, synthesize_slot

log = logging.getLogger(__name__)

ALGORITHMS = ("plain", "omc", "otd", "full_csi", "somp", "tp_demo")
CSV_FIELDS = ("slot", "algorithm", "trials", "failures", "pof", "ci_low", "ci_high", "lambda_mean")
Z95 = 1.959963984540054


@dataclass(frozen=True)
class ExperimentSpec:
    system: SystemConfig
    algorithms: tuple = ("plain", "omc", "full_csi")
    n_trials: int = 100
    power_profile: str = "equal"
    power_spread_db: float = 0.0
    output_path: str | None = None
    output_format: str = "csv"
    fixed_codes: bool = False
    threads: int = 1

    def __post_init__(self):
        algos = tuple(a.strip() for a in self.algorithms)
        if not algos:
            raise ConfigError("at least one algorithm required", field="algorithms")
        unknown = [a for a in algos if a not in ALGORITHMS]
        if unknown:
            raise ConfigError(f"unknown {unknown}; choose from {list(ALGORITHMS)}", field="algorithms")
        if len(set(algos)) != len(algos):
            raise ConfigError("duplicate entries", field="algorithms")
        object.__setattr__(self, "algorithms", algos)
        if int(self.n_trials) != self.n_trials or self.n_trials < 1:
            raise ConfigError(f"must be >= 1, got {self.n_trials!r}", field="n_trials")
        if self.output_format not in ("csv", "json"):
            raise ConfigError(f"must be csv or json, got {self.output_format!r}", field="output_format")
        if self.power_profile not in ("equal", "uniform_db_spread"):
            raise ConfigError(f"unknown profile {self.power_profile!r}", field="power_profile")
        if "otd" in algos and (self.power_profile != "equal" or not self.system.equal_power):
            raise ConfigError("otd requires the equal power profile", field="power_profile")
        if int(self.threads) != self.threads or self.threads < 1:
            raise ConfigError(f"must be >= 1, got {self.threads!r}", field="threads")

    @property
    def n_slots(self) -> int:
        return self.system.n_slots

    @classmethod
    def build(cls, n_users, n_active, code_len, n_antennas, *, n_slots=1, snr_db=0.0,
              noise_var=None, power=1.0, power_profile="equal", power_spread_db=0.0,
              seed=0, **kw) -> "ExperimentSpec":
        """Assemble a spec from flat scenario parameters.

        Powers for ``uniform_db_spread`` are drawn once from the seed's shared
        ``"powers"`` stream. ``noise_var`` overrides ``snr_db`` when given.
        """
        powers = power_profile_for(power_profile, n_users, power, power_spread_db, seed)
        if noise_var is None:
            system = SystemConfig.from_snr(n_users, n_active, code_len, n_antennas, snr_db,
                                           powers=powers, n_slots=n_slots, seed=seed)
        else:
            system = SystemConfig(n_users, n_active, code_len, n_antennas, n_slots,
                                  powers, noise_var, seed)
        return cls(system, power_profile=power_profile, power_spread_db=power_spread_db, **kw)


def power_profile_for(kind: str, n_users: int, power: float, spread_db: float, seed: int) -> np.ndarray:
    return power_profile(kind, n_users, power, spread_db, stream(seed, SHARED, 0, "powers"))


@dataclass(frozen=True)
class SlotResult:
    slot_index: int
    algorithm: str
    failures: int
    trials: int
    pof: float
    ci_low: float
    ci_high: float
    lambda_size_mean: float

    def row(self) -> dict:
        return {"slot": self.slot_index, "algorithm": self.algorithm, "trials": self.trials,
                "failures": self.failures, "pof": self.pof, "ci_low": self.ci_low,
                "ci_high": self.ci_high, "lambda_mean": self.lambda_size_mean}


def binomial_ci(failures: int, trials: int) -> tuple:
    """Normal-approximation 95% interval for a failure rate, clamped to [0, 1]."""
    p = failures / trials
    half = Z95 * math.sqrt(p * (1 - p) / trials)
    return max(0.0, p - half), min(1.0, p + half)


def _trial_draws(spec: ExperimentSpec, trial: int):
    cfg = spec.system
    code_trial = SHARED if spec.fixed_codes else trial
    codes = gen_codes(cfg, stream(cfg.seed, code_trial, 0, "codes"))
    channels = gen_channels(cfg, stream(cfg.seed, trial, 0, "channels"))
    return codes, channels


def run_trial(spec: ExperimentSpec, trial: int):
    """Failures and |Lambda| per (algorithm, slot) for one coherence interval.

    Returns two integer arrays of shape ``(len(algorithms), n_slots)``.
    """
    cfg = spec.system
    algos = spec.algorithms
    failures = np.zeros((len(algos), cfg.n_slots), dtype=np.int64)
    lam = np.zeros_like(failures)
    codes, channels = _trial_draws(spec, trial)
    knowledge = {a: ChannelKnowledge.empty(cfg.n_users, cfg.n_antennas) for a in ("omc", "otd")}
    exact = ChannelKnowledge.exact(channels) if "full_csi" in algos else None
    for s in range(cfg.n_slots):
        activity = draw_activity(cfg, stream(cfg.seed, trial, s, "activity"))
        slot = synthesize_slot(codes, channels, activity, cfg, stream(cfg.seed, trial, s, "noise"))
        corr = correlate(slot.received, codes)
        for i, algo in enumerate(algos):
            if algo == "plain":
                est = plain_slot(slot, codes, cfg, corr).support
            elif algo in ("omc", "otd"):
                lam[i, s] = len(knowledge[algo])
                step = omc_slot if algo == "omc" else otd_slot
                res, knowledge[algo] = step(slot, codes, knowledge[algo], cfg, s + 1, corr)
                est = res.support
            elif algo == "full_csi":
                lam[i, s] = cfg.n_users
                est = full_csi_slot(slot, codes, channels, cfg, corr, exact).support
            elif algo == "somp":
                est = somp(slot.received, codes, cfg.n_active)
            else:
                est = trivial_pursuit_slot(activity, channels, cfg, stream(cfg.seed, trial, s, "tp"))
            failures[i, s] = not np.array_equal(est.indices, activity.active_set)
    return failures, lam


def _run_chunk(spec: ExperimentSpec, trials) -> tuple:
    fail = lam = 0
    for t in trials:
        f, l = run_trial(spec, t)
        fail = fail + f
        lam = lam + l
    return fail, lam


def run_experiment(spec: ExperimentSpec) -> list:
    """Aggregate per-slot failure rates of every algorithm over all trials.

    With ``spec.threads > 1`` trials are spread over worker processes; the
    integer reduction makes the result independent of the split.
    """
    if "otd" in spec.algorithms:
        compute_thresholds(spec.system)
    trials = range(spec.n_trials)
    if spec.threads == 1:
        fail, lam = _run_chunk(spec, trials)
    else:
        chunks = [trials[i::spec.threads] for i in range(spec.threads)]
        with ProcessPoolExecutor(max_workers=spec.threads) as pool:
            parts = list(pool.map(_run_chunk, [spec] * len(chunks), chunks))
        fail = sum(p[0] for p in parts)
        lam = sum(p[1] for p in parts)
    results = []
    n = spec.n_trials
    for s in range(spec.n_slots):
        for i, algo in enumerate(spec.algorithms):
            f = int(fail[i, s])
            lo, hi = binomial_ci(f, n)
            results.append(SlotResult(s + 1, algo, f, n, f / n, lo, hi, float(lam[i, s]) / n))
    return results


# -- mean verification --------------------------------------------------------

@dataclass(frozen=True)
class MeanCheck:
    user_class: str
    empirical: float
    analytic: float

    @property
    def rel_error(self) -> float:
        if self.analytic == 0:
            return 0.0 if self.empirical == 0 else math.inf
        return abs(self.empirical - self.analytic) / abs(self.analytic)


MEAN_CLASSES = ("inactive_no_csi", "active_no_csi", "inactive_csi", "active_csi")


def class_statistics(received, codes, channels, indicator, powers, noise_var):
    """Per-user statistics and their closed-form means for one draw.

    Returns a dict mapping class name to ``(theta values, analytic means)``
    with exact CSI used for the two "csi" classes.
    """
    corr = correlate(received, codes)
    no_csi = weighted_stats(received, codes, ChannelKnowledge.empty(*corr.shape), corr)
    csi = weighted_stats(received, codes, ChannelKnowledge.exact(channels), corr)
    L = codes.shape[0]
    active = np.asarray(indicator, dtype=bool)
    powers = np.broadcast_to(np.asarray(powers, dtype=float), active.shape)
    floor = powers[active].sum() / L + noise_var
    return {
        "inactive_no_csi": (no_csi[~active], np.full((~active).sum(), floor)),
        "active_no_csi": (no_csi[active], floor + powers[active] * (1 - 1 / L)),
        "inactive_csi": (csi[~active], np.full((~active).sum(), floor)),
        "active_csi": (csi[active], floor + powers[active] * (3 - 1 / L)),
    }


def verify_means(cfg: SystemConfig, samples: int = 20000) -> list:
    """Compare empirical decision-statistic means with their closed forms.

    ``samples`` counts antenna samples per user; codes, channels, activity
    and noise are redrawn every ``cfg.n_antennas`` of them.
    """
    if samples < 1:
        raise ConfigError("must be >= 1", field="samples")
    draws = math.ceil(samples / cfg.n_antennas)
    sums = {c: [0.0, 0.0, 0] for c in MEAN_CLASSES}
    for d in range(draws):
        codes = gen_codes(cfg, stream(cfg.seed, d, 0, "codes"))
        channels = gen_channels(cfg, stream(cfg.seed, d, 0, "channels"))
        activity = draw_activity(cfg, stream(cfg.seed, d, 0, "activity"))
        slot = synthesize_slot(codes, channels, activity, cfg, stream(cfg.seed, d, 0, "noise"))
        stats = class_statistics(slot.received, codes, channels, activity.indicator,
                                 cfg.powers, cfg.noise_var)
        for c, (emp, ana) in stats.items():
            sums[c][0] += emp.sum()
            sums[c][1] += ana.sum()
            sums[c][2] += emp.size
    return [MeanCheck(c, s[0] / s[2], s[1] / s[2]) for c, s in sums.items() if s[2]]


# -- bound sweeps -------------------------------------------------------------

SWEEP_FIELDS = ("kind", "code_len", "n_antennas", "n_users", "n_active", "lambda_size", "k1", "k2",
                "p_min", "p_max", "noise_var", "value", "log10_value", "dominant_term", "branch",
                "valid")
LARGE_SYSTEM_LAMBDAS = (120000, 220001, 300000, 348000, 399600, 399800, 399950, 400000)


def run_bound_sweep(kinds, grid: dict) -> list:
    """Evaluate each bound kind over the cartesian product of ``grid``.

    ``grid`` maps :class:`~grantfree.bounds.BoundInputs` field names to
    value lists. An empty grid, or any empty list, yields no rows.
    """
    if not grid or any(len(v) == 0 for v in grid.values()):
        return []
    names = list(grid)
    rows = []
    for kind in kinds:
        fn = _bounds.BOUND_KINDS.get(kind)
        if fn is None:
            raise ConfigError(f"unknown bound kind {kind!r}", field="kind")
        for combo in itertools.product(*(grid[n] for n in names)):
            inputs = _bounds.BoundInputs(**dict(zip(names, combo)))
            rep = fn(inputs)
            rows.append({
                "kind": kind, "code_len": inputs.code_len, "n_antennas": inputs.n_antennas,
                "n_users": inputs.n_users, "n_active": inputs.n_active,
                "lambda_size": inputs.lambda_size, "k1": inputs.k1, "k2": inputs.k2,
                "p_min": inputs.p_min, "p_max": inputs.p_max, "noise_var": inputs.noise_var,
                "value": rep.value, "log10_value": rep.log_value / math.log(10),
                "dominant_term": rep.dominant_term, "branch": rep.branch, "valid": rep.valid,
            })
    return rows


def large_system_grid(noise_var: float | None = None) -> dict:
    """Bound-sweep grid of the large-system example (equal unit power)."""
    L = 49510
    noise_var = 1 / L if noise_var is None else noise_var
    return {"code_len": [L], "n_antennas": [50000], "n_users": [400000], "n_active": [40],
            "lambda_size": list(LARGE_SYSTEM_LAMBDAS), "noise_var": [noise_var]}


# -- output -------------------------------------------------------------------

def _fmt(value):
    if isinstance(value, bool) or value is None:
        return value
    if isinstance(value, (float, np.floating)):
        return float(f"{float(value):.9g}")
    if isinstance(value, np.integer):
        return int(value)
    return value


def _fmt_csv(value):
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.9g}"
    return "" if value is None else str(value)


def render(rows: list, fields, fmt: str = "csv") -> str:
    """Serialize dict rows as CSV (header ``fields``) or a JSON list."""
    if fmt == "json":
        return json.dumps([{k: _fmt(r[k]) for k in fields} for r in rows], indent=2) + "\n"
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(fields)
    for r in rows:
        writer.writerow([_fmt_csv(r[k]) for k in fields])
    return buf.getvalue()


def write_output(text: str, path=None) -> None:
    if path is None or str(path) == "-":
        print(text, end="")
    else:
        Path(path).write_text(text)
        log.info("wrote %s", path)


def results_table(results: list) -> list:
    return [r.row() for r in results]
