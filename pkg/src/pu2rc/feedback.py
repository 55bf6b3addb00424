"""Limited feedback: channel decomposition, codebooks, quantizers and SINR.

Analytic helpers (``ccdf_eps``, ``elog_eps_bounds``) use natural logs.
"""

from __future__ import annotations

import enum
import json
import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .numkernel import as_complex_vec, haar_unitaries, random_unit_vectors

# Per-beam SINR ceiling used when the quantization error is exactly zero in
# the interference-limited model.
SINR_CAP = 1e12


class Regime(str, enum.Enum):
    NORMAL = "normal"
    INTERFERENCE_LIMITED = "interference_limited"
    NOISE_LIMITED = "noise_limited"


class CodebookKind(str, enum.Enum):
    MULTI_BASIS = "multi_basis"
    RVQ = "rvq"


def db_to_linear(snr_db: float) -> float:
    return 10.0 ** (snr_db / 10.0)


@dataclass(frozen=True)
class ChannelRealization:
    h: np.ndarray
    g: float
    s: np.ndarray
    rho: float

    @property
    def n_t(self) -> int:
        return self.h.size


def decompose(h) -> ChannelRealization:
    """Split a channel vector into gain ``g = ||h||`` and unit-norm shape."""
    h = as_complex_vec(h)
    g = float(np.linalg.norm(h))
    if g == 0.0:
        raise ValueError("cannot decompose the zero channel")
    return ChannelRealization(h=h, g=g, s=h / g, rho=g * g)


@dataclass(frozen=True, eq=False)
class Codebook:
    """Flat list of unit-norm codewords, shape ``(N, n_t)``.

    For a multi-basis codebook, codeword ``m * n_t + n`` is the ``n``-th
    vector of basis ``m``.
    """

    kind: CodebookKind
    vectors: np.ndarray
    m: int = 1

    def __post_init__(self):
        v = np.asarray(self.vectors, dtype=np.complex128)
        if v.ndim != 2 or v.shape[0] == 0:
            raise ValueError("codebook needs a non-empty (N, n_t) array")
        object.__setattr__(self, "vectors", v)
        if self.kind == CodebookKind.MULTI_BASIS:
            if v.shape[0] != self.m * v.shape[1]:
                raise ValueError("multi-basis codebook must hold M * n_t vectors")
        else:
            object.__setattr__(self, "m", 1)

    @property
    def n_t(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    def basis(self, m: int) -> np.ndarray:
        """Basis ``m`` as an ``(n_t, n_t)`` matrix with codewords as columns."""
        if self.kind != CodebookKind.MULTI_BASIS:
            raise ValueError("RVQ codebooks have no basis structure")
        n_t = self.n_t
        return self.vectors[m * n_t:(m + 1) * n_t].T

    def split_index(self, index: int) -> tuple[int, int]:
        if self.kind != CodebookKind.MULTI_BASIS:
            raise ValueError("RVQ codebooks have no basis structure")
        return divmod(int(index), self.n_t)

    def to_json(self) -> str:
        if self.kind == CodebookKind.MULTI_BASIS:
            groups = [self.vectors[k * self.n_t:(k + 1) * self.n_t] for k in range(self.m)]
        else:
            groups = [self.vectors]
        doc = {
            "kind": self.kind.value,
            "n_t": self.n_t,
            "m": self.m,
            "bases": [
                [[[float(z.real), float(z.imag)] for z in vec] for vec in grp]
                for grp in groups
            ],
        }
        return json.dumps(doc)

    @classmethod
    def from_json(cls, text: str) -> "Codebook":
        doc = json.loads(text)
        vecs = [
            [complex(re, im) for re, im in vec]
            for grp in doc["bases"]
            for vec in grp
        ]
        return cls(CodebookKind(doc["kind"]), np.array(vecs, dtype=np.complex128), int(doc["m"]))


def multibasis_codebook(gen: np.random.Generator, n_t: int, m: int) -> Codebook:
    """``m`` independent Haar-random orthonormal bases of C^n_t."""
    u = haar_unitaries(gen, m, n_t)
    vectors = np.swapaxes(u, -1, -2).reshape(m * n_t, n_t)
    return Codebook(CodebookKind.MULTI_BASIS, vectors, m)


def rvq_codebook(gen: np.random.Generator, n_t: int, size: int) -> Codebook:
    return Codebook(CodebookKind.RVQ, random_unit_vectors(gen, size, n_t))


@dataclass(frozen=True)
class FeedbackReport:
    user: int
    codeword_index: int
    eps: float
    sinr: Optional[float] = None


def quantize_shapes(shapes: np.ndarray, vectors: np.ndarray):
    """Vectorised nearest-codeword search under ``d(v, s) = 1 - |v^H s|^2``.

    ``shapes`` has shape ``(..., U, n_t)`` and ``vectors`` ``(..., N, n_t)``
    with matching leading axes (or none). Returns ``(index, eps)`` of shape
    ``(..., U)``; ties go to the lowest index.
    """
    corr = np.abs(np.einsum("...nk,...uk->...un", vectors.conj(), shapes)) ** 2
    idx = np.argmax(corr, axis=-1)
    best = np.take_along_axis(corr, idx[..., None], axis=-1)[..., 0]
    return idx, np.clip(1.0 - best, 0.0, 1.0)


def quantize_shape(s, codebook: Codebook, user: int = 0) -> FeedbackReport:
    s = as_complex_vec(s)
    if s.size != codebook.n_t:
        raise ValueError("shape and codebook dimensions differ")
    idx, eps = quantize_shapes(s[None, :], codebook.vectors)
    return FeedbackReport(user=user, codeword_index=int(idx[0]), eps=float(eps[0]))


def sinr(gamma: float, rho: float, eps: float, regime=Regime.NORMAL) -> float:
    """Feedback SINR under orthogonal beamforming for the given regime.

    ``interference_limited`` with ``eps == 0`` returns ``inf``; rate
    computations clamp it at ``SINR_CAP``.
    """
    regime = Regime(regime)
    if regime == Regime.NORMAL:
        return gamma * rho * (1.0 - eps) / (1.0 + gamma * rho * eps)
    if regime == Regime.INTERFERENCE_LIMITED:
        if eps == 0.0:
            return math.inf
        return 1.0 / eps - 1.0
    return gamma * rho * (1.0 - eps)


def sinr_array(gamma: float, rho: np.ndarray, eps: np.ndarray, regime=Regime.NORMAL) -> np.ndarray:
    regime = Regime(regime)
    rho = np.asarray(rho, dtype=float)
    eps = np.asarray(eps, dtype=float)
    if regime == Regime.NORMAL:
        return gamma * rho * (1.0 - eps) / (1.0 + gamma * rho * eps)
    if regime == Regime.INTERFERENCE_LIMITED:
        out = np.full(np.broadcast(rho, eps).shape, np.inf)
        # subnormal eps overflows to inf, which beam_rate caps anyway
        with np.errstate(over="ignore"):
            np.divide(1.0, eps, out=out, where=eps > 0)
        return np.where(eps > 0, out - 1.0, np.inf)
    return gamma * rho * (1.0 - eps)


def beam_rate(xi) -> np.ndarray:
    """``log(1 + xi)`` in nats with the SINR clamped at ``SINR_CAP``."""
    return np.log1p(np.minimum(xi, SINR_CAP))


@dataclass(frozen=True, eq=False)
class SinrQuantizer:
    levels: np.ndarray
    bits: int

    def __post_init__(self):
        levels = np.asarray(self.levels, dtype=float)
        if levels.size != 2 ** self.bits:
            raise ValueError("a b-bit quantizer needs 2**b levels")
        if np.any(np.diff(levels) <= 0):
            raise ValueError("quantizer levels must be strictly increasing")
        object.__setattr__(self, "levels", levels)


def build_sinr_quantizer(bits: int, pilot_sinrs) -> SinrQuantizer:
    """Evenly spaced levels on ``[0, p99]`` of a pilot SINR sample."""
    if not 1 <= bits <= 16:
        raise ValueError("SINR quantizer bits must be in [1, 16]")
    pilot = np.asarray(pilot_sinrs, dtype=float)
    if pilot.size == 0:
        raise ValueError("pilot SINR sample is empty")
    top = float(np.percentile(np.minimum(pilot, SINR_CAP), 99.0))
    if top <= 0.0:
        raise ValueError("pilot SINRs have a degenerate 99% range")
    return quantizer_from_range(bits, top)


def quantizer_from_range(bits: int, top: float) -> SinrQuantizer:
    return SinrQuantizer(np.linspace(0.0, top, 2 ** bits), bits)


def quantize_sinr(x, q: SinrQuantizer):
    """Nearest level under squared error; ties resolve to the lower level."""
    levels = q.levels
    arr = np.asarray(x, dtype=float)
    hi = np.clip(np.searchsorted(levels, arr, side="left"), 1, levels.size - 1)
    lo = hi - 1
    pick_lo = (arr - levels[lo]) <= (levels[hi] - arr)
    out = np.where(pick_lo, levels[lo], levels[hi])
    if np.ndim(x) == 0:
        return float(out)
    return out


def ccdf_eps(delta: float, n_t: int, m: int) -> float:
    """``Pr(eps >= delta)`` for a random M-basis codebook, ``0 <= delta <= 1/2``."""
    if not 0.0 <= delta <= 0.5:
        raise ValueError("closed form holds only for 0 <= delta <= 1/2")
    if delta == 0.0:
        return 1.0
    base = max(0.0, 1.0 - n_t * delta ** (n_t - 1))
    return base ** m


def ccdf_eps_upper_bound(delta: float, n_t: int, m: int) -> float:
    """Upper bound ``(1 - delta^(n_t-1))^M`` valid on ``[0, 1]``."""
    if not 0.0 <= delta <= 1.0:
        raise ValueError("delta must lie in [0, 1]")
    return (1.0 - delta ** (n_t - 1)) ** m


def hit_probability(n_t: int, m: int) -> float:
    return 1.0 - (1.0 - n_t * 2.0 ** (-(n_t - 1))) ** m


def elog_eps_bounds(n_t: int, m: int) -> tuple[float, float]:
    """Lower and upper bounds on ``E[-log eps]`` (natural log)."""
    if n_t < 2:
        raise ValueError("bounds need n_t >= 2")
    if m < 1:
        raise ValueError("need at least one basis")
    p_alpha = hit_probability(n_t, m)
    lower = math.log(m) / ((n_t - 1) * p_alpha) + math.log(n_t) / (n_t - 1)
    return lower, lower + 1.0 / ((n_t - 1) * p_alpha)


def make_reports(channels, codebook: Codebook, gamma: float, regime=Regime.NORMAL,
                 quantizer: Optional[SinrQuantizer] = None) -> list[FeedbackReport]:
    """Full per-user feedback: codeword index, quantization error and SINR."""
    reports = []
    for u, ch in enumerate(channels):
        if not isinstance(ch, ChannelRealization):
            ch = decompose(ch)
        r = quantize_shape(ch.s, codebook, user=u)
        val = sinr(gamma, ch.rho, r.eps, regime)
        if quantizer is not None:
            val = quantize_sinr(val, quantizer)
        reports.append(FeedbackReport(u, r.codeword_index, r.eps, val))
    return reports
