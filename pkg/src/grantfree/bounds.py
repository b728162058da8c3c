"""Probability-of-failure upper bounds and measurement inequalities.

All ``log`` and ``log log`` terms are natural logarithms. Code lengths below
16 are rejected so that ``ln ln L > 1``.

The four user classes are abbreviated as in the sub-exponential parameter
names: ``nb`` inactive without CSI, ``ng`` active without CSI, ``fb``
inactive with CSI, ``fg`` active with CSI.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

from .errors import CapExceeded, ConfigError, LogLogDomainError, PowerControlRequired

MIN_CODE_LEN = 16
L_CAP = 10**9
TERMS = ("nb", "ng", "fb", "fg")


@dataclass(frozen=True)
class BoundInputs:
    """Scenario seen by the bounds.

    ``k1`` (active users with CSI) defaults to ``round(K |Lambda| / N)``, the
    expected overlap under uniform activity; ``k2`` defaults to ``K - k1``.
    ``code_len`` may be left ``None`` for the measurement-inequality solver,
    which searches over it.
    """

    n_users: int
    n_active: int
    lambda_size: int = 0
    code_len: int | None = None
    n_antennas: float = math.inf
    k1: int | None = None
    k2: int | None = None
    p_min: float = 1.0
    p_max: float = 1.0
    noise_var: float = 0.0
    delta: float | None = None

    def __post_init__(self):
        N, K, lam = self.n_users, self.n_active, self.lambda_size
        if K < 1 or K > N:
            raise ConfigError(f"need 1 <= K <= N, got K={K}, N={N}", field="n_active")
        if not 0 <= lam <= N:
            raise ConfigError(f"need 0 <= |Lambda| <= N, got {lam}", field="lambda_size")
        k1 = self.k1
        if k1 is None:
            k1 = min(math.floor(K * lam / N + 0.5), K, lam)
        k2 = K - k1 if self.k2 is None else self.k2
        object.__setattr__(self, "k1", int(k1))
        object.__setattr__(self, "k2", int(k2))
        if k1 < 0 or k2 < 0 or k1 + k2 != K:
            raise ConfigError(f"need K1 + K2 = K with both >= 0, got {k1} + {k2}", field="k1")
        if k1 > min(K, lam):
            raise ConfigError(f"K1={k1} exceeds min(K, |Lambda|)={min(K, lam)}", field="k1")
        if k2 > N - lam:
            raise ConfigError(f"K2={k2} exceeds N - |Lambda|={N - lam}", field="k2")
        if self.code_len is not None and self.code_len < MIN_CODE_LEN:
            raise LogLogDomainError(self.code_len)
        if self.n_antennas <= 0:
            raise ConfigError("must be > 0", field="n_antennas")
        if not 0 < self.p_min <= self.p_max:
            raise ConfigError(f"need 0 < p_min <= p_max, got {self.p_min}, {self.p_max}", field="p_min")
        if self.noise_var < 0:
            raise ConfigError("must be >= 0", field="noise_var")
        if self.delta is not None and not 0 < self.delta < 1:
            raise ConfigError(f"need 0 < delta < 1, got {self.delta}", field="delta")

    @property
    def populations(self) -> dict:
        """Number of users in each class."""
        N, K, lam = self.n_users, self.n_active, self.lambda_size
        return {"nb": N - lam - self.k2, "ng": K - self.k1, "fb": lam - self.k1, "fg": self.k1}

    def _require_code_len(self) -> int:
        if self.code_len is None:
            raise ConfigError("code length required", field="code_len")
        return self.code_len


@dataclass(frozen=True)
class SubExpParams:
    t: float
    t_f: float
    b_nb: float
    b_ng: float
    b_fb: float
    b_fg: float
    nu2_nb: float
    nu2_ng: float
    nu2_fb: float
    nu2_fg: float

    def b(self, term: str) -> float:
        return getattr(self, "b_" + term)

    def nu2(self, term: str) -> float:
        return getattr(self, "nu2_" + term)


@dataclass(frozen=True)
class BoundReport:
    """An evaluated bound.

    ``log_value`` is the natural log of the unclamped tail bound, so sweeps
    can compare values far below float resolution; ``value`` is clamped to
    [0, 1] and set to 1 when a validity condition fails.
    """

    value: float
    log_value: float
    validity: dict = field(default_factory=dict)
    dominant_term: str | None = None
    branch: str = "exponential-tail"

    @property
    def valid(self) -> bool:
        return all(self.validity.values())


def _loglog(L: float) -> float:
    if L < MIN_CODE_LEN:
        raise LogLogDomainError(int(L))
    return math.log(math.log(L))


def subexp_params(inputs: BoundInputs) -> SubExpParams:
    """Deviation scales and sub-exponential (nu^2, b) pairs of the four classes."""
    L = inputs._require_code_len()
    ll = _loglog(L)
    M, K = inputs.n_antennas, inputs.n_active
    if K < 2:
        raise ConfigError("the bound parameters need K >= 2", field="n_active")
    P, s2 = inputs.p_max, inputs.noise_var
    s4 = s2 * s2
    K1 = K - 1
    t = inputs.p_min * (1 - 1 / L)
    t_f = inputs.p_min * (3 - 1 / L)
    # max{a, b, 4 s2 L / (M K P)} * K P / L, distributed to stay finite as M -> inf
    b_nb = max(4 * ll * K * P / L, 16 * ll / M * K * P / L, 4 * s2 / M)
    b_ng = max(4 * ll * K1 * P / L, 16 * ll / M * K1 * P / L, 4 * s2 / M)
    b_fb = max(4 * ll, 16 * ll / M) * K * P / L
    b_fg = max(4 * ll, 16 * ll / M) * K1 * P / L
    nu2_nb = (4 * (L - 1) * K * P**2 / L**3
              + 64 * K**2 * P**2 * ll**2 / (M * L**2)
              + (4 * L * s4 + 32 * s2 * K * P * ll) / (M * L))
    nu2_ng = (4 * (L - 1) * K1 * P**2 / L**3
              + 64 * K1**2 * P**2 * ll**2 / (M * L**2)
              + (4 * L * s4 + 8 * L * s2 * P + 32 * s2 * K * P * ll) / (M * L)
              + (3 * P**2 + 48 * K1**2 * P**2 * ll**2 / L**2 + 24 * K1 * P**2 * ll / L) / M)
    nu2_fb = (4 * (L - 1) * K * P**2 / L**3
              + 64 * K**2 * P**2 * ll**2 / (M * L**2)
              + (4 * L * s4 + 96 * s2 * K * P * ll) / (M * L)
              + (s4 + 48 * K**2 * P**2 * ll**2 / L**2 + 8 * s2 * K * P * ll / L) / M)
    nu2_fg = (4 * (L - 1) * K * P**2 / L**3
              + 64 * K1**2 * P**2 * ll**2 / (M * L**2)
              + (12 * s4 + 8 * s2 * (15 * P + 12 * K1 * P * ll / L)) / M
              + (105 * P**2 + 144 * K1**2 * P**2 * ll**2 / L**2
                 + (360 * P + 24 * s2) * K1 * P * ll / L + 3 * s4 + 30 * P * s2) / M)
    return SubExpParams(t, t_f, b_nb, b_ng, b_fb, b_fg, nu2_nb, nu2_ng, nu2_fb, nu2_fg)


def _tail_bound(inputs: BoundInputs, scales: dict) -> BoundReport:
    params = subexp_params(inputs)
    pops = inputs.populations
    exponents = {}
    validity = {}
    for term in TERMS:
        dev = scales[term](params)
        b = params.b(term)
        if pops[term] > 0:
            validity[term] = dev / 2 > params.nu2(term) / b
            exponents[term] = -dev / (2 * b) + math.log(pops[term])
    dominant = max(exponents, key=exponents.get)
    log_value = math.log(4) + exponents[dominant]
    if not all(validity.values()):
        return BoundReport(1.0, log_value, validity, dominant, "clamped-trivial")
    return BoundReport(min(1.0, math.exp(min(log_value, 0.0))), log_value, validity, dominant)


_OMC_SCALES = {"nb": lambda p: p.t, "ng": lambda p: p.t, "fb": lambda p: p.t, "fg": lambda p: p.t_f}
_OTD_SCALES = {"nb": lambda p: p.t, "ng": lambda p: p.t, "fb": lambda p: p.t_f, "fg": lambda p: p.t_f}


def omc_pof_bound(inputs: BoundInputs) -> BoundReport:
    """Finite-M bound on OMC's probability of failure.

    ``4 exp(max_class(-dev / (2 b_class) + ln population_class))`` over the
    classes with nonzero population, with ``dev = t`` except ``t_f`` for
    active users with CSI.
    """
    return _tail_bound(inputs, _OMC_SCALES)


def _require_equal_power(inputs: BoundInputs) -> None:
    if inputs.p_min != inputs.p_max:
        raise PowerControlRequired()


def otd_pof_bound(inputs: BoundInputs) -> BoundReport:
    """Finite-M bound for OTD; both classes with CSI use ``t_f``."""
    _require_equal_power(inputs)
    return _tail_bound(inputs, _OTD_SCALES)


def _clamped(log_value: float, dominant: str) -> BoundReport:
    return BoundReport(math.exp(min(log_value, 0.0)), log_value, {}, dominant)


def omc_pof_bound_large_m(inputs: BoundInputs) -> BoundReport:
    """``4 max{N - |Lambda|, |Lambda|} exp(-P_min (L - 1) / (8 K P_max ln ln L))``."""
    L = inputs._require_code_len()
    N, lam, K = inputs.n_users, inputs.lambda_size, inputs.n_active
    rate = inputs.p_min * (L - 1) / (8 * K * inputs.p_max * _loglog(L))
    count, dominant = (N - lam, "no-csi") if N - lam >= lam else (lam, "csi")
    return _clamped(math.log(4 * count) - rate, dominant)


def otd_pof_bound_large_m(inputs: BoundInputs) -> BoundReport:
    """``4 max{(N - |Lambda|) e^{-(L-1)/(8K lnln L)}, |Lambda| e^{-(3L-1)/(8K lnln L)}}``."""
    _require_equal_power(inputs)
    L = inputs._require_code_len()
    N, lam, K = inputs.n_users, inputs.lambda_size, inputs.n_active
    ll = _loglog(L)
    terms = {}
    if N - lam > 0:
        terms["no-csi"] = math.log(N - lam) - (L - 1) / (8 * K * ll)
    if lam > 0:
        terms["csi"] = math.log(lam) - (3 * L - 1) / (8 * K * ll)
    dominant = max(terms, key=terms.get)
    return _clamped(math.log(4) + terms[dominant], dominant)


BOUND_KINDS = {
    "omc": omc_pof_bound,
    "otd": otd_pof_bound,
    "omc-large-m": omc_pof_bound_large_m,
    "otd-large-m": otd_pof_bound_large_m,
}


# -- measurement inequalities -------------------------------------------------

@dataclass(frozen=True)
class MinLResult:
    """Smallest admissible code length with its boundary certificate.

    ``holds_below`` is the predicate at ``code_len - 1``; it is ``None``
    when ``code_len`` is already the domain floor of 16.
    """

    kind: str
    code_len: int
    holds: bool
    holds_below: bool | None
    rhs: float


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0 else -math.inf


def inequality(kind: str, inputs: BoundInputs):
    """Return ``(lhs(L), rhs)`` for one measurement inequality ``lhs(L) >= rhs``."""
    N, K, lam, d = inputs.n_users, inputs.n_active, inputs.lambda_size, inputs.delta
    if d is None:
        raise ConfigError("target failure probability required", field="delta")
    ratio = 8 * K * inputs.p_max / inputs.p_min

    def plain_lhs(L):
        return (L - 1) / _loglog(L)

    def full_lhs(L):
        return (3 * L - 1) / _loglog(L)

    if kind == "omc":
        return plain_lhs, ratio * _safe_log(4 * max(lam, N - lam) / d)
    if kind == "plain":
        return plain_lhs, ratio * _safe_log(2 * (N - K) / d)
    if kind == "full_csi":
        return full_lhs, ratio * _safe_log(2 * (N - K) / d)
    if kind in ("otd_small_lambda", "otd_large_lambda"):
        _require_equal_power(inputs)
        if kind == "otd_small_lambda":
            return plain_lhs, 8 * K * _safe_log(4 * (N - lam) / d)
        return full_lhs, 8 * K * _safe_log(4 * lam / d)
    raise ConfigError(f"unknown inequality kind {kind!r}", field="kind")


def solve_measurement_inequality(kind: str, inputs: BoundInputs, cap: int = L_CAP) -> MinLResult:
    """Smallest integer ``L >= 16`` satisfying the selected inequality.

    The left-hand side increases with ``L`` on the domain, so an exponential
    search brackets the answer and bisection pins it down.
    """
    kind = kind.replace("-", "_")
    lhs, rhs = inequality(kind, inputs)

    def ok(L):
        return lhs(L) >= rhs

    lo = MIN_CODE_LEN
    if ok(lo):
        return MinLResult(kind, lo, True, None, rhs)
    hi = lo * 2
    while not ok(hi):
        if hi >= cap:
            raise CapExceeded(cap)
        lo, hi = hi, min(hi * 2, cap)
    # invariant: ok(hi) and not ok(lo)
    while hi - lo > 1:
        mid = (lo + hi) // 2
        if ok(mid):
            hi = mid
        else:
            lo = mid
    return MinLResult(kind, hi, True, ok(hi - 1), rhs)
