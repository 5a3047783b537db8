"""The timeliness weighting function: 1 inside a gold interval, asymmetric
Gaussian decay outside it, with the early tail wider than the late one."""

from __future__ import annotations

import math

from .model import GoldSlot, TaskKind, TimelinessConfig

DEFAULT_EPSILON = 1e-6


def timeliness_score(
    tau: float, t_s: float, t_e: float, sigma_early: float, sigma_late: float
) -> float:
    """Score a response at time ``tau`` against the interval ``[t_s, t_e]``.

    Inside the interval the score is exactly 1. Before it, the score decays as
    ``exp(-(tau - t_s)^2 / (2 sigma_early^2))``; after it, the same form with
    ``t_e`` and ``sigma_late``. With ``sigma_early > sigma_late`` an early
    response always outscores an equally-distant late one.
    """
    if t_s > t_e:
        raise ValueError(f"invalid interval: t_s {t_s} > t_e {t_e}")
    if not sigma_early > sigma_late > 0.0:
        raise ValueError(
            f"need sigma_early > sigma_late > 0, got {sigma_early} vs {sigma_late}"
        )
    if tau < t_s:
        d = tau - t_s
        return math.exp(-(d * d) / (2.0 * sigma_early * sigma_early))
    if tau > t_e:
        d = tau - t_e
        return math.exp(-(d * d) / (2.0 * sigma_late * sigma_late))
    return 1.0


def is_temporally_valid(score: float, epsilon: float = DEFAULT_EPSILON) -> bool:
    """The matcher's zero-test: the tails never reach exactly 0, so scores at
    or below ``epsilon`` count as not temporally valid."""
    if epsilon < 0.0:
        raise ValueError("epsilon must be >= 0")
    return score > epsilon


def score_for_slot(tau: float, slot: GoldSlot, task: TaskKind, cfg: TimelinessConfig) -> float:
    """Timeliness of a response against one slot, using the task's decay widths."""
    return timeliness_score(
        tau, slot.t_s, slot.t_e, cfg.sigma_early[task], cfg.sigma_late[task]
    )
