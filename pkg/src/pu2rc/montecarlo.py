"""Monte Carlo experiment engine, reference scaling curves and slope fits.

Every trial ``t`` draws from ``RandomStream(seed, t)`` regardless of the user
count, so all points of a user grid (and all algorithms sharing a seed) see
common random numbers: the first ``U`` users of a larger draw are exactly the
users of the smaller one. Trials are processed in fixed-size blocks whose
layout does not depend on the worker count, which keeps results bit-identical
for any ``SIM_THREADS`` value.
"""

from __future__ import annotations

import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from pydantic import BaseModel, ConfigDict, Field, field_validator, model_validator

from .baselines import DpcConfig, ZfConfig, ZfKey, ZfPower, dpc_batch, rvq_codebooks, zf_batch
from .feedback import (
    Regime,
    build_sinr_quantizer,
    db_to_linear,
    multibasis_codebook,
    quantize_shapes,
    quantize_sinr,
    sinr_array,
)
from .numkernel import CHANNELS, CODEBOOK, PILOT, RVQ, RandomStream, complex_gaussian, haar_unitaries
from .scheduler import schedule_batch

LN2 = math.log(2.0)
# stream ids reserved for run-level draws; trial ids count up from zero
FIXED_CODEBOOK_STREAM = (1 << 64) - 1
PILOT_STREAM = (1 << 64) - 2

_BLOCK_ELEMENTS = 2_000_000
_MAX_BLOCK = 512


class Algorithm(str, enum.Enum):
    PU2RC = "PU2RC"
    ZF_SDMA = "ZF_SDMA"
    DPC = "DPC"


class CodebookMode(str, enum.Enum):
    PER_TRIAL = "per_trial"
    FIXED = "fixed"


class ExperimentConfig(BaseModel):
    """One throughput-versus-users curve."""

    model_config = ConfigDict(extra="forbid", frozen=True, use_enum_values=False)

    algorithm: Algorithm
    regime: Regime = Regime.NORMAL
    n_t: int = Field(ge=1, le=16)
    m: Optional[int] = Field(default=None, ge=1)
    codebook_bits: Optional[int] = Field(default=None, ge=1, le=16)
    snr_db: float
    user_grid: list[int]
    trials: int = Field(default=10_000, ge=1)
    seed: int = Field(default=0, ge=0, lt=1 << 64)
    sinr_feedback_bits: Optional[int] = Field(default=None, ge=1, le=16)
    pilot_trials: int = Field(default=10_000, ge=1)
    codebook_mode: CodebookMode = CodebookMode.PER_TRIAL
    ortho_threshold: float = Field(default=0.25, gt=0.0, le=1.0)
    zf_power: ZfPower = ZfPower.PER_BEAM
    zf_key: ZfKey = ZfKey.SINR
    shared_rvq_codebook: bool = False
    dpc_tol: float = Field(default=1e-6, gt=0.0)
    dpc_max_iters: int = Field(default=1000, ge=1)
    label: Optional[str] = None

    @field_validator("user_grid")
    @classmethod
    def _grid(cls, v):
        if not v:
            raise ValueError("user_grid must not be empty")
        if any(u < 1 for u in v):
            raise ValueError("user counts must be positive")
        if any(b <= a for a, b in zip(v, v[1:])):
            raise ValueError("user_grid must be strictly ascending")
        return v

    @model_validator(mode="after")
    def _algorithm_fields(self):
        if self.algorithm == Algorithm.PU2RC and self.m is None:
            raise ValueError("m: PU2RC needs the number of bases")
        if self.algorithm == Algorithm.ZF_SDMA and self.codebook_bits is None:
            raise ValueError("codebook_bits: ZF_SDMA needs the RVQ codebook size")
        if self.sinr_feedback_bits is not None and self.algorithm != Algorithm.PU2RC:
            raise ValueError("sinr_feedback_bits: only PU2RC supports SINR quantization")
        return self

    @property
    def gamma(self) -> float:
        return db_to_linear(self.snr_db)

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.algorithm == Algorithm.PU2RC:
            tag = f"PU2RC_N{self.m * self.n_t}"
            if self.sinr_feedback_bits:
                tag += f"_q{self.sinr_feedback_bits}"
            return tag
        if self.algorithm == Algorithm.ZF_SDMA:
            return f"ZF_SDMA_N{2 ** self.codebook_bits}"
        return "DPC"


@dataclass(frozen=True)
class CurvePoint:
    U: int
    mean: float  # bps/Hz
    stderr: float
    n_trials: int
    mean_scheduled: float


def worker_count(threads: Optional[int] = None) -> int:
    if threads is None:
        env = os.environ.get("SIM_THREADS")
        threads = int(env) if env else (os.cpu_count() or 1)
    return max(1, int(threads))


def block_size(cfg: ExperimentConfig, U: int) -> int:
    if cfg.algorithm == Algorithm.PU2RC:
        per_trial = U * cfg.m * cfg.n_t
    elif cfg.algorithm == Algorithm.ZF_SDMA:
        per_trial = U * (2 ** cfg.codebook_bits) * cfg.n_t * 2
    else:
        per_trial = U * cfg.n_t * cfg.n_t * 16
    return int(min(_MAX_BLOCK, max(1, _BLOCK_ELEMENTS // max(per_trial, 1))))


def fixed_codebook(cfg: ExperimentConfig):
    gen = RandomStream(cfg.seed, FIXED_CODEBOOK_STREAM).generator(CODEBOOK)
    return multibasis_codebook(gen, cfg.n_t, cfg.m)


def trial_codebook(cfg: ExperimentConfig, trial: int):
    """Multi-basis codebook used by a PU2RC trial."""
    if cfg.codebook_mode == CodebookMode.FIXED:
        return fixed_codebook(cfg)
    gen = RandomStream(cfg.seed, trial).generator(CODEBOOK)
    return multibasis_codebook(gen, cfg.n_t, cfg.m)


def trial_channels(cfg: ExperimentConfig, U: int, trial: int) -> np.ndarray:
    """``(U, n_t)`` i.i.d. CN(0, 1) channel matrix of one trial."""
    return complex_gaussian(RandomStream(cfg.seed, trial).generator(CHANNELS), (U, cfg.n_t))


def trial_rvq(cfg: ExperimentConfig, U: int, trial: int) -> np.ndarray:
    gen = RandomStream(cfg.seed, trial).generator(RVQ)
    return rvq_codebooks(gen, U, cfg.n_t, cfg.codebook_bits, cfg.shared_rvq_codebook)


def pilot_quantizer(cfg: ExperimentConfig):
    """SINR quantizer fitted to per-user feedback SINRs of a pilot run."""
    gen = RandomStream(cfg.seed, PILOT_STREAM).generator(PILOT)
    n = cfg.pilot_trials
    h = complex_gaussian(gen, (n, 1, cfg.n_t))
    if cfg.codebook_mode == CodebookMode.FIXED:
        vecs = fixed_codebook(cfg).vectors
    else:
        u = haar_unitaries(gen, n * cfg.m, cfg.n_t)
        vecs = np.swapaxes(u, -1, -2).reshape(n, cfg.m * cfg.n_t, cfg.n_t)
    rho = np.sum(np.abs(h) ** 2, axis=-1)
    _, eps = quantize_shapes(h / np.sqrt(rho)[..., None], vecs)
    pilot = sinr_array(cfg.gamma, rho, eps, cfg.regime)
    return build_sinr_quantizer(cfg.sinr_feedback_bits, pilot.ravel())


def _pu2rc_block(cfg, U, trials, quantizer):
    h = np.stack([trial_channels(cfg, U, t) for t in trials])
    if cfg.codebook_mode == CodebookMode.FIXED:
        vecs = fixed_codebook(cfg).vectors
    else:
        vecs = np.stack([trial_codebook(cfg, t).vectors for t in trials])
    rho = np.sum(np.abs(h) ** 2, axis=-1)
    idx, eps = quantize_shapes(h / np.sqrt(rho)[..., None], vecs)
    true = sinr_array(cfg.gamma, rho, eps, cfg.regime)
    select = true if quantizer is None else quantize_sinr(true, quantizer)
    rate, n_sched, _ = schedule_batch(select, true, idx, cfg.m, cfg.n_t)
    return rate, n_sched


def _zf_block(cfg, U, trials):
    h = np.stack([trial_channels(cfg, U, t) for t in trials])
    cb = np.stack([trial_rvq(cfg, U, t) for t in trials])
    zcfg = ZfConfig(cfg.gamma, cfg.codebook_bits, cfg.ortho_threshold, cfg.zf_power,
                    cfg.shared_rvq_codebook, cfg.zf_key)
    rate, n_sched, _ = zf_batch(h, cb, zcfg)
    return rate, n_sched


def _dpc_block(cfg, U, trials):
    h = np.stack([trial_channels(cfg, U, t) for t in trials])
    power = cfg.gamma * cfg.n_t
    res = dpc_batch(h, DpcConfig(power, cfg.dpc_tol, cfg.dpc_max_iters))
    return res.capacity, np.sum(res.powers > 1e-9 * power, axis=-1)


def trial_rates(cfg: ExperimentConfig, U: int, threads: Optional[int] = None):
    """Per-trial rates (nats) and scheduled-user counts for one grid point."""
    quantizer = pilot_quantizer(cfg) if cfg.sinr_feedback_bits else None
    bs = block_size(cfg, U)
    blocks = [range(a, min(a + bs, cfg.trials)) for a in range(0, cfg.trials, bs)]

    def run(block):
        if cfg.algorithm == Algorithm.PU2RC:
            return _pu2rc_block(cfg, U, block, quantizer)
        if cfg.algorithm == Algorithm.ZF_SDMA:
            return _zf_block(cfg, U, block)
        return _dpc_block(cfg, U, block)

    n_workers = min(worker_count(threads), len(blocks))
    if n_workers > 1:
        with ThreadPoolExecutor(max_workers=n_workers) as pool:
            parts = list(pool.map(run, blocks))
    else:
        parts = [run(b) for b in blocks]
    rates = np.concatenate([p[0] for p in parts])
    counts = np.concatenate([p[1] for p in parts]).astype(float)
    return rates, counts


def summarize(U: int, rates_nats: np.ndarray, counts: np.ndarray) -> CurvePoint:
    bits = rates_nats / LN2
    n = bits.size
    stderr = float(np.std(bits, ddof=1) / math.sqrt(n)) if n > 1 else 0.0
    return CurvePoint(U=U, mean=float(np.mean(bits)), stderr=stderr, n_trials=n,
                      mean_scheduled=float(np.mean(counts)))


def run_experiment(cfg: ExperimentConfig, threads: Optional[int] = None) -> list[CurvePoint]:
    """Ergodic throughput (bps/Hz) for every user count in the grid."""
    return [summarize(U, *trial_rates(cfg, U, threads)) for U in cfg.user_grid]


class Axis(str, enum.Enum):
    LOG_U = "log_u"
    LOG_LOG_U = "log_log_u"


def _abscissa(users, axis: Axis, base: float) -> np.ndarray:
    u = np.asarray(users, dtype=float)
    if Axis(axis) == Axis.LOG_U:
        return np.log(u) / math.log(base)
    return np.log(np.log(u)) / math.log(base)


def reference_curve(regime, n_t: int, user_grid: Sequence[int], base: float = 2.0) -> list[float]:
    """Asymptotic scaling-law curve in the same log base as the throughput.

    Normal and noise-limited regimes follow ``n_t * log(ln U)``; the
    interference-limited regime follows ``n_t / (n_t - 1) * log U``.
    """
    regime = Regime(regime)
    users = np.asarray(user_grid, dtype=float)
    if regime == Regime.INTERFERENCE_LIMITED:
        if n_t < 2:
            raise ValueError("interference-limited law needs n_t >= 2")
        if np.any(users < 1):
            raise ValueError("user counts must be positive")
        return list(n_t / (n_t - 1) * _abscissa(users, Axis.LOG_U, base))
    if np.any(users < 3):
        raise ValueError("log log U needs U >= 3")
    return list(n_t * _abscissa(users, Axis.LOG_LOG_U, base))


def estimate_slope(points: Sequence[CurvePoint], axis, base: float = 2.0) -> float:
    """Least-squares slope of throughput against log U or log log U.

    Only the largest-U half of the points enters the fit.
    """
    pts = sorted(points, key=lambda p: p.U)
    upper = pts[len(pts) // 2:]
    if len(upper) < 5:
        raise ValueError("need at least 5 points in the upper half of the grid")
    x = _abscissa([p.U for p in upper], Axis(axis), base)
    y = np.array([p.mean for p in upper])
    if np.ptp(x) <= 1e-12:
        raise ValueError("degenerate abscissa spread")
    return float(np.polyfit(x, y, 1)[0])
