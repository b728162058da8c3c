"""Random objects of the uplink model and received-signal synthesis.

The base station has ``M`` antennas and serves ``N`` single-antenna users,
``K`` of which are active in each random access slot. Each user owns a fixed
Rademacher code of length ``L``; channels are IID real Gaussian and stay
constant over one coherence interval of ``T_s`` slots. Per antenna ``m``::

    y_m = sum_{k in S} sqrt(P_k) H[m, k] c_k + w_m,    i.e.  Y = C X + W
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionError


@dataclass(frozen=True)
class SystemConfig:
    """Scenario dimensions and physical parameters.

    ``powers`` holds the linear received power of every user; a scalar is
    broadcast to all ``n_users``.
    """

    n_users: int
    n_active: int
    code_len: int
    n_antennas: int
    n_slots: int = 1
    powers: np.ndarray | float = 1.0
    noise_var: float = 0.0
    seed: int = 0

    def __post_init__(self):
        for name in ("n_users", "n_active", "code_len", "n_antennas", "n_slots"):
            value = getattr(self, name)
            if int(value) != value or value < 1:
                raise ConfigError(f"must be a positive integer, got {value!r}", field=name)
            object.__setattr__(self, name, int(value))
        if self.n_active > self.n_users:
            raise ConfigError(
                f"K={self.n_active} exceeds N={self.n_users}", field="n_active"
            )
        powers = np.asarray(self.powers, dtype=float)
        if powers.ndim == 0:
            powers = np.full(self.n_users, float(powers))
        if powers.shape != (self.n_users,):
            raise ConfigError(
                f"expected {self.n_users} powers, got shape {powers.shape}", field="powers"
            )
        if not np.all(np.isfinite(powers)) or np.any(powers <= 0):
            raise ConfigError("all powers must be finite and > 0", field="powers")
        powers.setflags(write=False)
        object.__setattr__(self, "powers", powers)
        if not np.isfinite(self.noise_var) or self.noise_var < 0:
            raise ConfigError(f"must be >= 0, got {self.noise_var!r}", field="noise_var")
        object.__setattr__(self, "noise_var", float(self.noise_var))

    @classmethod
    def from_snr(cls, n_users, n_active, code_len, n_antennas, snr_db=0.0, *,
                 power=1.0, powers=None, **kw) -> "SystemConfig":
        """Build a config whose noise level gives ``P / (L sigma_w^2)`` = ``snr_db``.

        ``power`` is the reference power ``P``; with an explicit ``powers``
        array the weakest user serves as the reference.
        """
        if powers is None:
            powers = power
        p_ref = float(np.min(powers))
        noise_var = p_ref / (code_len * 10.0 ** (snr_db / 10.0))
        return cls(n_users, n_active, code_len, n_antennas, powers=powers,
                   noise_var=noise_var, **kw)

    @property
    def p_min(self) -> float:
        return float(self.powers.min())

    @property
    def p_max(self) -> float:
        return float(self.powers.max())

    @property
    def equal_power(self) -> bool:
        return bool(np.all(self.powers == self.powers[0]))

    @property
    def snr_db(self) -> float:
        """SNR of the weakest user, ``P_min / (L sigma_w^2)`` in dB."""
        if self.noise_var == 0:
            return float("inf")
        return float(10 * np.log10(self.p_min / (self.code_len * self.noise_var)))


def power_profile(kind: str, n_users: int, power: float = 1.0, spread_db: float = 0.0,
                  rng: np.random.Generator | None = None) -> np.ndarray:
    """Per-user received powers for a named profile.

    ``"equal"`` gives every user ``power``. ``"uniform_db_spread"`` draws each
    user's power uniformly in dB over ``[0, spread_db]`` above ``power``.
    """
    if kind == "equal":
        return np.full(n_users, float(power))
    if kind == "uniform_db_spread":
        if spread_db < 0:
            raise ConfigError("spread must be >= 0 dB", field="power_spread_db")
        if rng is None:
            raise ConfigError("uniform_db_spread needs a random stream", field="power_profile")
        return power * 10.0 ** (rng.uniform(0.0, spread_db, n_users) / 10.0)
    raise ConfigError(f"unknown power profile {kind!r}", field="power_profile")


@dataclass(frozen=True)
class ActivityPattern:
    """Active user set of one slot, kept both as sorted indices and as 0/1 indicator."""

    active_set: np.ndarray
    indicator: np.ndarray = field(repr=False)

    @classmethod
    def from_indices(cls, indices, n_users: int) -> "ActivityPattern":
        active = np.unique(np.asarray(indices, dtype=np.intp))
        if active.size and (active[0] < 0 or active[-1] >= n_users):
            raise DimensionError(f"active index out of range [0, {n_users})", field="n_users")
        q = np.zeros(n_users, dtype=np.int8)
        q[active] = 1
        return cls(active, q)

    def __len__(self) -> int:
        return int(self.active_set.size)


@dataclass(frozen=True)
class SlotData:
    """One random access slot: ``received = codes @ signal + noise``."""

    received: np.ndarray
    signal: np.ndarray
    noise: np.ndarray
    activity: ActivityPattern


def gen_codes(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """L x N matrix of IID equiprobable +-1/sqrt(L) entries (unit-norm columns)."""
    signs = rng.integers(0, 2, size=(cfg.code_len, cfg.n_users), dtype=np.int8) * 2 - 1
    return signs / np.sqrt(cfg.code_len)


def gen_channels(cfg: SystemConfig, rng: np.random.Generator) -> np.ndarray:
    """M x N matrix of IID standard normal gains; entry (m, n) is user n to antenna m."""
    return rng.standard_normal((cfg.n_antennas, cfg.n_users))


def draw_activity(cfg: SystemConfig, rng: np.random.Generator) -> ActivityPattern:
    """Uniformly random K-subset of the users."""
    chosen = rng.choice(cfg.n_users, size=cfg.n_active, replace=False)
    return ActivityPattern.from_indices(chosen, cfg.n_users)


def signal_matrix(channels: np.ndarray, activity: ActivityPattern, powers) -> np.ndarray:
    """N x M matrix with ``X[n, m] = q_n sqrt(P_n) H[m, n]``."""
    powers = np.broadcast_to(np.asarray(powers, dtype=float), (channels.shape[1],))
    active = activity.active_set
    signal = np.zeros((channels.shape[1], channels.shape[0]))
    signal[active] = np.sqrt(powers[active])[:, None] * channels[:, active].T
    return signal


def synthesize_slot(codes: np.ndarray, channels: np.ndarray, activity: ActivityPattern,
                    cfg: SystemConfig, rng: np.random.Generator) -> SlotData:
    """Draw receiver noise and form the received matrix of one slot."""
    L, N = codes.shape
    M = channels.shape[0]
    if L != cfg.code_len:
        raise DimensionError(f"codes have {L} rows, config says L={cfg.code_len}", field="code_len")
    if N != cfg.n_users:
        raise DimensionError(f"codes have {N} columns, config says N={cfg.n_users}", field="n_users")
    if channels.shape[1] != N:
        raise DimensionError(
            f"channels have {channels.shape[1]} columns, codes have {N}", field="n_users"
        )
    if M != cfg.n_antennas:
        raise DimensionError(
            f"channels have {M} rows, config says M={cfg.n_antennas}", field="n_antennas"
        )
    if activity.indicator.shape != (N,):
        raise DimensionError(
            f"activity covers {activity.indicator.shape[0]} users, expected {N}", field="n_users"
        )
    signal = signal_matrix(channels, activity, cfg.powers)
    noise = rng.normal(0.0, np.sqrt(cfg.noise_var), size=(L, M))
    # only active rows of the signal are nonzero
    received = codes[:, activity.active_set] @ signal[activity.active_set] + noise
    return SlotData(received, signal, noise, activity)
