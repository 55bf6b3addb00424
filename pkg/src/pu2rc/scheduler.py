"""Joint user scheduling and beam selection over a multi-basis codebook.

Each codeword is given to the strongest user that quantized onto it, then the
basis with the largest sum of per-beam rates is chosen. Rates are in nats.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from .feedback import Codebook, CodebookKind, FeedbackReport, beam_rate


@dataclass(frozen=True, eq=False)
class ScheduleDecision:
    m_star: int
    assignments: tuple[Optional[int], ...]
    beam_sinrs: tuple[float, ...]
    beamformers: np.ndarray
    sum_rate: float

    @property
    def scheduled_users(self) -> list[int]:
        return [u for u in self.assignments if u is not None]


def associate(reports: Sequence[FeedbackReport], codebook: Codebook) -> dict[int, list[int]]:
    """Group users by quantized codeword; every codeword gets a (maybe empty) list."""
    groups: dict[int, list[int]] = {k: [] for k in range(codebook.size)}
    seen = set()
    for r in reports:
        if r.user in seen:
            raise ValueError(f"duplicate report for user {r.user}")
        seen.add(r.user)
        if not 0 <= r.codeword_index < codebook.size:
            raise ValueError(f"codeword index {r.codeword_index} out of range")
        groups[r.codeword_index].append(r.user)
    for users in groups.values():
        users.sort()
    return groups


def instantaneous_rate(decision: ScheduleDecision) -> float:
    return float(np.sum(beam_rate(np.asarray(decision.beam_sinrs, dtype=float))))


def count_scheduled(decision: ScheduleDecision) -> int:
    return sum(u is not None for u in decision.assignments)


def schedule(reports: Sequence[FeedbackReport], codebook: Codebook) -> ScheduleDecision:
    if codebook.kind != CodebookKind.MULTI_BASIS:
        raise ValueError("scheduling needs a multi-basis codebook")
    n_t = codebook.n_t
    groups = associate(reports, codebook)
    by_user = {r.user: r for r in reports}

    winners: list[Optional[int]] = []
    xi = np.zeros(codebook.size)
    for k in range(codebook.size):
        best = None
        for u in groups[k]:
            # users are sorted, so strict '>' keeps the lowest index on ties
            if best is None or by_user[u].sinr > by_user[best].sinr:
                best = u
        winners.append(best)
        if best is not None:
            xi[k] = by_user[best].sinr

    objective = beam_rate(xi).reshape(codebook.m, n_t).sum(axis=1)
    m_star = int(np.argmax(objective))
    sl = slice(m_star * n_t, (m_star + 1) * n_t)
    beam_sinrs = tuple(float(x) for x in xi[sl])
    return ScheduleDecision(
        m_star=m_star,
        assignments=tuple(winners[sl]),
        beam_sinrs=beam_sinrs,
        beamformers=codebook.basis(m_star),
        sum_rate=float(objective[m_star]),
    )


def realized_rate(decision: ScheduleDecision, true_sinrs) -> float:
    """Rate of a decision re-evaluated on each scheduled user's true SINR.

    Used when scheduling consumed quantized SINR reports.
    """
    xi = [0.0 if u is None else float(true_sinrs[u]) for u in decision.assignments]
    return float(np.sum(beam_rate(np.asarray(xi))))


def schedule_batch(select_sinr: np.ndarray, true_sinr: np.ndarray, codeword: np.ndarray,
                   m: int, n_t: int):
    """Vectorised scheduler over a batch of independent trials.

    All inputs have shape ``(T, U)``. Users compete for codewords on
    ``select_sinr`` (lowest user index wins ties); the credited rate uses
    ``true_sinr`` of the winners. Returns ``(rate, n_scheduled, m_star)``.
    """
    T, U = select_sinr.shape
    n = m * n_t
    if U == 0:
        zeros = np.zeros(T)
        return zeros, zeros.astype(int), zeros.astype(int)
    flat = (np.arange(T)[:, None] * n + codeword).ravel()
    sel = select_sinr.ravel()
    users = np.tile(np.arange(U), T)
    order = np.lexsort((users, -sel, flat))
    fs = flat[order]
    first = np.ones(fs.size, dtype=bool)
    first[1:] = fs[1:] != fs[:-1]
    win = order[first]

    xi_sel = np.zeros(T * n)
    xi_true = np.zeros(T * n)
    occupied = np.zeros(T * n, dtype=bool)
    xi_sel[flat[win]] = sel[win]
    xi_true[flat[win]] = true_sinr.ravel()[win]
    occupied[flat[win]] = True

    objective = beam_rate(xi_sel).reshape(T, m, n_t).sum(axis=-1)
    m_star = np.argmax(objective, axis=1)
    rows = np.arange(T)
    rate = beam_rate(xi_true).reshape(T, m, n_t)[rows, m_star].sum(axis=-1)
    n_sched = occupied.reshape(T, m, n_t)[rows, m_star].sum(axis=-1)
    return rate, n_sched, m_star
