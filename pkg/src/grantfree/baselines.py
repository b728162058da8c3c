"""Greedy MMV baseline and the independent-sensing-matrix demonstration."""
from __future__ import annotations

import numpy as np

from .detectors import SupportEstimate, ls_refine, select_top_k
from .system import ActivityPattern, SystemConfig, draw_activity, gen_channels, signal_matrix


def somp_path(received: np.ndarray, codes: np.ndarray, k: int):
    """Run simultaneous OMP and also return the residual norm after each step.

    Each iteration picks the unused column maximizing ``sum_m (c_n . r_m)^2``
    over the current residual, then re-projects ``received`` onto all
    selected columns by least squares.

    Returns ``(SupportEstimate, residual_norms)`` where ``residual_norms[0]``
    is the norm of ``received`` itself.
    """
    L, N = codes.shape
    if k < 0 or k > min(L, N):
        raise ValueError(f"k={k} must lie in [0, min(L, N)={min(L, N)}]")
    residual = received
    chosen: list[int] = []
    scores: list[float] = []
    norms = [float(np.linalg.norm(received))]
    available = np.ones(N, dtype=bool)
    for _ in range(k):
        corr = codes.T @ residual
        energy = np.einsum("nm,nm->n", corr, corr)
        energy[~available] = -np.inf
        pick = int(np.argmax(energy))
        chosen.append(pick)
        scores.append(float(energy[pick]))
        available[pick] = False
        idx = np.array(chosen)
        residual = received - codes[:, idx] @ ls_refine(received, codes, idx)
        norms.append(float(np.linalg.norm(residual)))
    order = np.argsort(chosen)
    support = SupportEstimate(np.array(chosen, dtype=np.intp)[order], np.array(scores)[order])
    return support, np.array(norms)


def somp(received: np.ndarray, codes: np.ndarray, k: int) -> SupportEstimate:
    """Simultaneous orthogonal matching pursuit support of size ``k``."""
    return somp_path(received, codes, k)[0]


def trivial_pursuit_slot(activity: ActivityPattern, channels: np.ndarray, cfg: SystemConfig,
                         rng: np.random.Generator) -> SupportEstimate:
    """Thresholding when every antenna sees its own Gaussian sensing matrix.

    Sensing entries are N(0, 1/L) so columns have unit norm on average; the
    unknowns and noise follow the regular model.
    """
    L, N, M = cfg.code_len, cfg.n_users, channels.shape[0]
    x = signal_matrix(channels, activity, cfg.powers).T  # M x N
    sensing = rng.standard_normal((M, L, N)) / np.sqrt(L)
    y = np.einsum("mln,mn->ml", sensing, x)
    y += rng.normal(0.0, np.sqrt(cfg.noise_var), size=(M, L))
    corr = np.einsum("mln,ml->nm", sensing, y)
    stats = np.einsum("nm,nm->n", corr, corr) / M
    return select_top_k(stats, cfg.n_active)


def trivial_pursuit_demo(cfg: SystemConfig, rng: np.random.Generator, n_trials: int = 200) -> float:
    """Exact-recovery frequency of trivial pursuit over ``n_trials`` fresh draws."""
    hits = 0
    for _ in range(n_trials):
        activity = draw_activity(cfg, rng)
        channels = gen_channels(cfg, rng)
        est = trivial_pursuit_slot(activity, channels, cfg, rng)
        hits += np.array_equal(est.indices, activity.active_set)
    return hits / n_trials
