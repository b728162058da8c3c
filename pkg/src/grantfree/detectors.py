"""Activity detectors built on correlation statistics.

Four detectors share the building blocks below:

* plain thresholding: the K largest ``theta_n = mean_m (c_n . y_m)^2``;
* OMC: the same statistic with channel estimates folded in for users seen
  earlier in the coherence interval, unioned with plain thresholding and
  pruned back to K users by least-squares row energy;
* OTD: like OMC, but users are declared active by comparing the weighted
  statistic against one threshold for users with CSI and another without;
* full-CSI thresholding: the weighted statistic with the true channels.

OMC and OTD carry a :class:`ChannelKnowledge` from slot to slot; every
function here returns a new object rather than mutating its inputs.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg.lapack import dtrtrs

from .errors import DimensionError, PowerControlRequired, SingularSupport, UnderdeterminedSupport
from .system import SlotData, SystemConfig


@dataclass(frozen=True)
class SupportEstimate:
    """Sorted user indices with the score each one was selected on."""

    indices: np.ndarray
    per_index_score: np.ndarray

    def __len__(self) -> int:
        return int(self.indices.size)

    def as_set(self) -> frozenset:
        return frozenset(int(i) for i in self.indices)


@dataclass(frozen=True)
class ThresholdPair:
    t_known: float
    t_unknown: float


@dataclass(frozen=True)
class ChannelKnowledge:
    """Averaged channel estimates for users already detected in this interval.

    ``estimates[n]`` is the running mean of user n's M-vector estimates and
    ``activation_counts[n]`` how many estimates went into it; rows of users
    outside the known set are zero and carry count 0.
    """

    estimates: np.ndarray
    activation_counts: np.ndarray

    @classmethod
    def empty(cls, n_users: int, n_antennas: int) -> "ChannelKnowledge":
        return cls(np.zeros((n_users, n_antennas)), np.zeros(n_users, dtype=np.int64))

    @classmethod
    def exact(cls, channels: np.ndarray) -> "ChannelKnowledge":
        """Every user known, with the true M x N channel matrix."""
        return cls(np.ascontiguousarray(np.asarray(channels, dtype=float).T),
                   np.ones(channels.shape[1], dtype=np.int64))

    @property
    def known(self) -> np.ndarray:
        return self.activation_counts > 0

    @property
    def known_set(self) -> np.ndarray:
        return np.flatnonzero(self.activation_counts)

    def __len__(self) -> int:
        return int(np.count_nonzero(self.activation_counts))


@dataclass(frozen=True)
class DetectionResult:
    """Output of one detector on one slot.

    ``stats`` is the statistic that drove selection (the weighted one for
    OMC/OTD/full-CSI); ``signal_estimate`` rows follow ``support.indices``
    and is ``None`` for detectors that skip the LS step.
    """

    support: SupportEstimate
    stats: np.ndarray
    signal_estimate: np.ndarray | None = None


def _check_dims(received: np.ndarray, codes: np.ndarray) -> None:
    if received.ndim != 2 or codes.ndim != 2:
        raise DimensionError("received and codes must be 2-D", field="ndim")
    if received.shape[0] != codes.shape[0]:
        raise DimensionError(
            f"received has {received.shape[0]} rows but codes have {codes.shape[0]}",
            field="code_len",
        )


def _received(slot) -> np.ndarray:
    return slot.received if isinstance(slot, SlotData) else np.asarray(slot)


def correlate(received: np.ndarray, codes: np.ndarray) -> np.ndarray:
    """N x M matrix of matched-filter outputs ``c_n . y_m``."""
    _check_dims(received, codes)
    return codes.T @ received


def _mean_square(z: np.ndarray) -> np.ndarray:
    return np.einsum("nm,nm->n", z, z) / z.shape[1]


def plain_stats(received: np.ndarray, codes: np.ndarray, corr: np.ndarray | None = None) -> np.ndarray:
    """``theta_n = (1/M) sum_m (c_n . y_m)^2``.

    ``corr`` may carry a precomputed :func:`correlate` result.
    """
    if corr is None:
        corr = correlate(received, codes)
    return _mean_square(corr)


def weight_matrix(knowledge: ChannelKnowledge) -> np.ndarray:
    """N x M weights: the stored estimate for known users, 1 elsewhere."""
    return np.where(knowledge.known[:, None], knowledge.estimates, 1.0)


def weighted_stats(received: np.ndarray, codes: np.ndarray, knowledge: ChannelKnowledge,
                   corr: np.ndarray | None = None) -> np.ndarray:
    """``theta_n = (1/M) sum_m (H~[m, n] c_n . y_m)^2`` with estimates where known."""
    if corr is None:
        corr = correlate(received, codes)
    if knowledge.estimates.shape != corr.shape:
        raise DimensionError(
            f"knowledge is {knowledge.estimates.shape}, statistics need {corr.shape}",
            field="n_antennas",
        )
    known = knowledge.known
    if known.all():
        return _mean_square(knowledge.estimates * corr)
    plain = _mean_square(corr)
    if not known.any():
        return plain
    # unknown rows of ``estimates`` are zero, so one dense product suffices
    return np.where(known, _mean_square(knowledge.estimates * corr), plain)


def select_top_k(stats: np.ndarray, k: int) -> SupportEstimate:
    """Indices of the ``k`` largest values; ties go to the lower index."""
    stats = np.asarray(stats)
    if k > stats.size or k < 0:
        raise ValueError(f"cannot select k={k} of {stats.size} users")
    order = np.argsort(-stats, kind="stable")[:k]
    idx = np.sort(order)
    return SupportEstimate(idx, stats[idx])


def ls_refine(received: np.ndarray, codes: np.ndarray, support) -> np.ndarray:
    """Least-squares signal rows on ``support``, solved through a QR factorization.

    Returns a ``len(support) x M`` matrix ordered like ``support``.
    """
    idx = np.asarray(getattr(support, "indices", support), dtype=np.intp)
    _check_dims(received, codes)
    L = codes.shape[0]
    if idx.size == 0:
        return np.zeros((0, received.shape[1]))
    if idx.size > L:
        raise UnderdeterminedSupport(idx, L)
    sub = codes[:, idx]
    q, r = np.linalg.qr(sub)
    diag = np.abs(np.diag(r))
    if diag.min() <= max(sub.shape) * np.finfo(float).eps * diag.max():
        raise SingularSupport(idx)
    x, info = dtrtrs(r, q.T @ received)
    if info != 0:
        raise SingularSupport(idx)
    return x


def estimate_channels(signal_estimate: np.ndarray, support, cfg: SystemConfig) -> np.ndarray:
    """Channel rows ``X_hat[n] / sqrt(P_n)`` for the users in ``support``."""
    idx = np.asarray(getattr(support, "indices", support), dtype=np.intp)
    return signal_estimate / np.sqrt(cfg.powers[idx])[:, None]


def update_knowledge(knowledge: ChannelKnowledge, new_estimates: np.ndarray, support) -> ChannelKnowledge:
    """Fold new estimates into the per-user running means.

    Users seeing their first activation are inserted with count 1.
    """
    idx = np.asarray(getattr(support, "indices", support), dtype=np.intp)
    estimates = knowledge.estimates.copy()
    counts = knowledge.activation_counts.copy()
    if idx.size:
        new_counts = counts[idx] + 1
        estimates[idx] += (new_estimates - estimates[idx]) / new_counts[:, None]
        counts[idx] = new_counts
    return ChannelKnowledge(estimates, counts)


def _initialize(received, codes, knowledge, cfg, corr):
    stats = plain_stats(received, codes, corr)
    support = select_top_k(stats, cfg.n_active)
    xhat = ls_refine(received, codes, support)
    knowledge = update_knowledge(knowledge, estimate_channels(xhat, support, cfg), support)
    return DetectionResult(support, stats, xhat), knowledge


def _cap_union(s1: SupportEstimate, s2: SupportEstimate, score: np.ndarray, limit: int) -> np.ndarray:
    """Union of both sets; past ``limit``, keep all of ``s2`` plus the best of the rest."""
    union = np.union1d(s1.indices, s2.indices)
    if union.size <= limit:
        return union
    extra = np.setdiff1d(s1.indices, s2.indices)
    room = max(limit - s2.indices.size, 0)
    order = np.argsort(-score[extra], kind="stable")[:room]
    return np.union1d(s2.indices, extra[order])


def _refine_and_learn(received, codes, knowledge, cfg, candidates, stats):
    xhat = ls_refine(received, codes, candidates)
    energy = np.einsum("nm,nm->n", xhat, xhat)
    keep = select_top_k(energy, min(cfg.n_active, candidates.size))
    pruned = candidates[keep.indices]
    support = SupportEstimate(pruned, energy[keep.indices])
    xhat = ls_refine(received, codes, pruned)
    knowledge = update_knowledge(knowledge, estimate_channels(xhat, pruned, cfg), pruned)
    return DetectionResult(support, stats, xhat), knowledge


def omc_slot(slot, codes: np.ndarray, knowledge: ChannelKnowledge, cfg: SystemConfig,
             slot_index: int, corr: np.ndarray | None = None):
    """One slot of opportunistic maximum correlation.

    Slot 1 is plain thresholding followed by LS channel estimation. Later
    slots take the top K of the weighted statistic and of the plain one,
    solve LS on their union, keep the K rows of largest energy, re-solve on
    those and fold the resulting channel estimates into ``knowledge``.

    Returns ``(DetectionResult, ChannelKnowledge)``.
    """
    if slot_index < 1:
        raise ValueError(f"slot_index starts at 1, got {slot_index}")
    received = _received(slot)
    if corr is None:
        corr = correlate(received, codes)
    if slot_index == 1:
        return _initialize(received, codes, knowledge, cfg, corr)
    weighted = weighted_stats(received, codes, knowledge, corr)
    s1 = select_top_k(weighted, cfg.n_active)
    s2 = select_top_k(plain_stats(received, codes, corr), cfg.n_active)
    candidates = _cap_union(s1, s2, weighted, cfg.code_len)
    return _refine_and_learn(received, codes, knowledge, cfg, candidates, weighted)


def compute_thresholds(cfg: SystemConfig) -> ThresholdPair:
    """Decision thresholds for users with and without CSI (equal powers only).

    Each sits midway between the mean statistic of an active and an
    inactive user of its class.
    """
    if not cfg.equal_power:
        raise PowerControlRequired()
    P, L, K, s2 = float(cfg.powers[0]), cfg.code_len, cfg.n_active, cfg.noise_var
    floor = K / L * P + s2
    return ThresholdPair(P * (3 - 1 / L) / 2 + floor, P * (1 - 1 / L) / 2 + floor)


def otd_slot(slot, codes: np.ndarray, knowledge: ChannelKnowledge, cfg: SystemConfig,
             slot_index: int, corr: np.ndarray | None = None):
    """One slot of the opportunistic thresholding detector.

    Identical to :func:`omc_slot` except that the first candidate set holds
    every user whose weighted statistic clears its class threshold.
    """
    thresholds = compute_thresholds(cfg)
    if slot_index < 1:
        raise ValueError(f"slot_index starts at 1, got {slot_index}")
    received = _received(slot)
    if corr is None:
        corr = correlate(received, codes)
    if slot_index == 1:
        return _initialize(received, codes, knowledge, cfg, corr)
    weighted = weighted_stats(received, codes, knowledge, corr)
    limit = np.where(knowledge.known, thresholds.t_known, thresholds.t_unknown)
    hits = np.flatnonzero(weighted >= limit)
    s1 = SupportEstimate(hits, weighted[hits])
    s2 = select_top_k(plain_stats(received, codes, corr), cfg.n_active)
    candidates = _cap_union(s1, s2, weighted, cfg.code_len)
    return _refine_and_learn(received, codes, knowledge, cfg, candidates, weighted)


def full_csi_slot(slot, codes: np.ndarray, channels: np.ndarray, cfg: SystemConfig,
                  corr: np.ndarray | None = None,
                  knowledge: ChannelKnowledge | None = None) -> DetectionResult:
    """Thresholding with the true channels as weights; no LS step.

    ``knowledge`` may pass ``ChannelKnowledge.exact(channels)`` built once
    per coherence interval.
    """
    received = _received(slot)
    if channels.shape != (received.shape[1], codes.shape[1]):
        raise DimensionError(
            f"channels are {channels.shape}, expected {(received.shape[1], codes.shape[1])}",
            field="n_antennas",
        )
    if knowledge is None:
        knowledge = ChannelKnowledge.exact(channels)
    stats = weighted_stats(received, codes, knowledge, corr)
    return DetectionResult(select_top_k(stats, cfg.n_active), stats)


def plain_slot(slot, codes: np.ndarray, cfg: SystemConfig, corr: np.ndarray | None = None) -> DetectionResult:
    """Ordinary thresholding: the K largest plain statistics."""
    stats = plain_stats(_received(slot), codes, corr)
    return DetectionResult(select_top_k(stats, cfg.n_active), stats)
