"""Reference schemes: ZF-SDMA with RVQ feedback and the DPC sum-capacity bound.

Rates are in nats per channel use.
"""

from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .feedback import ChannelRealization, decompose, quantize_shapes, sinr_array
from .numkernel import RVQ, RandomStream, random_unit_vectors

_RANK_TOL = 1e-10


class ZfKey(str, enum.Enum):
    SINR = "sinr"
    CHANNEL_NORM = "channel_norm"


class ZfPower(str, enum.Enum):
    # gamma = P / n_t on every active beam, as for the orthogonal-beam scheme
    PER_BEAM = "per_beam"
    # total power P split evenly over the active beams
    SPLIT_TOTAL = "split_total"


@dataclass(frozen=True)
class ZfConfig:
    gamma: float
    codebook_bits: int
    ortho_threshold: float = 0.25
    power: ZfPower = ZfPower.PER_BEAM
    shared_codebook: bool = False
    key: ZfKey = ZfKey.SINR

    def __post_init__(self):
        if not 0.0 < self.ortho_threshold <= 1.0:
            raise ValueError("ortho_threshold must lie in (0, 1]")
        if self.codebook_bits < 1:
            raise ValueError("codebook_bits must be positive")
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "power", ZfPower(self.power))
        object.__setattr__(self, "key", ZfKey(self.key))


@dataclass(frozen=True)
class DpcConfig:
    power: float
    tol: float = 1e-6
    max_iters: int = 1000

    def __post_init__(self):
        if self.power <= 0:
            raise ValueError("power must be positive")
        if self.tol <= 0:
            raise ValueError("tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be >= 1")


class MonotonicityError(RuntimeError):
    """Water-filling objective decreased between iterations."""


def rvq_codebooks(gen: np.random.Generator, n_users: int, n_t: int, bits: int,
                  shared: bool = False, batch: int | None = None) -> np.ndarray:
    """Random codebooks of ``2**bits`` unit vectors, one per user unless shared."""
    count = 1 if shared else n_users
    shape = (count, 2 ** bits) if batch is None else (batch, count, 2 ** bits)
    return random_unit_vectors(gen, shape, n_t)


def _zf_beams(dirs: np.ndarray) -> np.ndarray:
    """Unit-norm zero-forcing beams for stacked directions ``(B, k, n_t)``.

    Returns ``(B, n_t, k)``; column ``j`` is orthogonal to every direction
    ``i != j``.
    """
    s = np.swapaxes(dirs, -1, -2)  # (B, n_t, k): columns are the directions
    g = np.swapaxes(s.conj(), -1, -2) @ s
    w = s @ np.linalg.inv(g)
    return w / np.linalg.norm(w, axis=-2, keepdims=True)


def zf_batch(h: np.ndarray, codebooks: np.ndarray, cfg: ZfConfig):
    """ZF-SDMA over a batch of trials.

    ``h`` is ``(T, U, n_t)``; ``codebooks`` is ``(T, U or 1, N, n_t)``.
    Returns ``(rate, n_scheduled, selected)`` where ``selected`` is a
    ``(T, n_t)`` user-index array padded with -1.
    """
    T, U, n_t = h.shape
    rho = np.sum(np.abs(h) ** 2, axis=-1)
    shapes = h / np.sqrt(rho)[..., None]
    if codebooks.shape[1] == 1:
        idx, eps = quantize_shapes(shapes, codebooks[:, 0])
        qdir = np.take_along_axis(codebooks[:, 0], idx[..., None], axis=1)
    else:
        idx, eps = quantize_shapes(shapes[..., None, :], codebooks)
        qdir = np.take_along_axis(codebooks, idx[..., None], axis=2)[:, :, 0, :]
        eps = eps[..., 0]
    fb = sinr_array(cfg.gamma, rho, eps) if cfg.key == ZfKey.SINR else rho

    rows = np.arange(T)
    selected = np.full((T, n_t), -1)
    active = np.ones(T, dtype=bool)
    avail = np.ones((T, U), dtype=bool)
    for step in range(n_t):
        live = active & avail.any(axis=1)
        if not live.any():
            break
        score = np.where(avail, fb, -np.inf)
        pick = np.argmax(score, axis=1)
        selected[live, step] = pick[live]
        if step > 0:
            idx_sel = selected[:, :step + 1].copy()
            idx_sel[~live] = 0
            d = np.take_along_axis(qdir, idx_sel[..., None], axis=1)
            gm = d.conj() @ np.swapaxes(d, -1, -2)
            smallest = np.linalg.eigvalsh(gm)[:, 0]
            deficient = live & (smallest < _RANK_TOL ** 2)
            selected[deficient, step] = -1
            active &= ~deficient
            live &= ~deficient
        new_dir = qdir[rows, pick]
        corr = np.abs(np.einsum("tuk,tk->tu", qdir, new_dir.conj())) ** 2
        avail &= ~live[:, None] | (corr <= cfg.ortho_threshold)
        avail[rows[live], pick[live]] = False
        active &= live

    n_sched = np.sum(selected >= 0, axis=1)
    rate = np.zeros(T)
    for k in range(1, n_t + 1):
        grp = np.flatnonzero(n_sched == k)
        if grp.size == 0:
            continue
        users = selected[grp, :k]
        d = np.take_along_axis(qdir[grp], users[..., None], axis=1)
        w = _zf_beams(d)
        hs = np.take_along_axis(h[grp], users[..., None], axis=1)  # (B, k, n_t)
        gains = np.abs(hs.conj() @ w) ** 2  # [b, i, j] = |h_i^H w_j|^2
        p = cfg.gamma if cfg.power == ZfPower.PER_BEAM else cfg.gamma * n_t / k
        sig = np.diagonal(gains, axis1=-2, axis2=-1)
        interf = gains.sum(axis=-1) - sig
        rate[grp] = np.log1p(p * sig / (1.0 + p * interf)).sum(axis=-1)
    return rate, n_sched, selected


def _as_matrix(channels: Sequence) -> np.ndarray:
    rows = [c.h if isinstance(c, ChannelRealization) else decompose(c).h for c in channels]
    return np.stack(rows)


def zf_schedule_and_rate(channels: Sequence, cfg: ZfConfig, stream: RandomStream):
    """Schedule one channel draw with ZF-SDMA; returns ``(users, rate_nats)``."""
    if len(channels) == 0:
        raise ValueError("need at least one user")
    h = _as_matrix(channels)
    U, n_t = h.shape
    cb = rvq_codebooks(stream.generator(RVQ), U, n_t, cfg.codebook_bits, cfg.shared_codebook)
    rate, _, sel = zf_batch(h[None], cb[None], cfg)
    return [int(u) for u in sel[0] if u >= 0], float(rate[0])


def _logdet(h: np.ndarray, p: np.ndarray) -> np.ndarray:
    n_t = h.shape[-1]
    s = np.eye(n_t) + np.einsum("...u,...ui,...uj->...ij", p, h, h.conj())
    return np.linalg.slogdet(s)[1]


def water_fill(inv_gain: np.ndarray, power: float) -> np.ndarray:
    """Row-wise water-filling: ``p = (mu - inv_gain)^+`` with ``sum(p) = power``."""
    srt = np.sort(inv_gain, axis=-1)
    k = np.arange(1, srt.shape[-1] + 1)
    mu_k = (power + np.cumsum(srt, axis=-1)) / k
    ok = mu_k > srt
    last = srt.shape[-1] - 1 - np.argmax(ok[..., ::-1], axis=-1)
    mu = np.take_along_axis(mu_k, last[..., None], axis=-1)
    return np.maximum(mu - inv_gain, 0.0)


@dataclass
class DpcResult:
    capacity: np.ndarray
    powers: np.ndarray
    iterations: np.ndarray
    converged: np.ndarray
    history: list = field(default_factory=list)


def dpc_batch(h: np.ndarray, cfg: DpcConfig, keep_history: bool = False) -> DpcResult:
    """Sum capacity of the MISO broadcast channel via its dual MAC.

    Maximises ``log det(I + sum_u p_u h_u h_u^H)`` over ``p >= 0``,
    ``sum(p) <= P`` by sum-power iterative water-filling. Each iteration
    water-fills every user against the others, then moves towards that point
    with the largest step in ``{1, 1/2, 1/4, ..., 1/U}`` that does not lower
    the objective; the ``1/U`` average never does.

    ``h`` has shape ``(T, U, n_t)``.
    """
    T, U, _ = h.shape
    power = cfg.power
    p = np.full((T, U), power / U)
    f = _logdet(h, p)
    steps = [1.0]
    while steps[-1] > 1.0 / U:
        steps.append(max(steps[-1] / 2.0, 1.0 / U))
    steps = np.array(steps)

    iters = np.zeros(T, dtype=int)
    done = np.zeros(T, dtype=bool)
    history = [f.copy()] if keep_history else []
    for _ in range(cfg.max_iters):
        live = ~done
        if not live.any():
            break
        hl, pl, fl = h[live], p[live], f[live]
        n_t = hl.shape[-1]
        s = np.eye(n_t) + np.einsum("tu,tui,tuj->tij", pl, hl, hl.conj())
        a = np.einsum("tui,tij,tuj->tu", hl.conj(), np.linalg.inv(s), hl).real
        gain = a / np.maximum(1.0 - pl * a, 1e-300)
        target = water_fill(1.0 / np.maximum(gain, 1e-300), power)

        cand = pl[None] + steps[:, None, None] * (target - pl)[None]
        fc = np.stack([_logdet(hl, c) for c in cand])
        good = fc >= fl[None]
        pick = np.where(good.any(axis=0), np.argmax(good, axis=0), steps.size - 1)
        cols = np.arange(pl.shape[0])
        f_new = fc[pick, cols]
        scale = 1e-12 * (1.0 + np.abs(fl))
        if np.any(f_new < fl - scale):
            raise MonotonicityError("water-filling objective decreased")
        p[live] = cand[pick, cols]
        f[live] = np.maximum(f_new, fl)
        iters[live] += 1
        done[np.flatnonzero(live)[f_new - fl < cfg.tol]] = True
        if keep_history:
            history.append(f.copy())
    return DpcResult(capacity=f, powers=p, iterations=iters, converged=done, history=history)


def dpc_sum_capacity(channels: Sequence, cfg: DpcConfig) -> float:
    """DPC sum capacity (nats) for one channel draw with perfect CSI."""
    if len(channels) == 0:
        raise ValueError("need at least one user")
    res = dpc_batch(_as_matrix(channels)[None], cfg)
    if not res.converged[0]:
        warnings.warn("iterative water-filling hit max_iters; returning best iterate",
                      RuntimeWarning, stacklevel=2)
    return float(res.capacity[0])


def frank_wolfe_gap(h: np.ndarray, p: np.ndarray, power: float) -> np.ndarray:
    """Certified bound on ``capacity - objective(p)`` from concavity."""
    n_t = h.shape[-1]
    s = np.eye(n_t) + np.einsum("...u,...ui,...uj->...ij", p, h, h.conj())
    a = np.einsum("...ui,...ij,...uj->...u", h.conj(), np.linalg.inv(s), h).real
    return power * a.max(axis=-1) - np.sum(p * a, axis=-1)
