"""Complex vector primitives and reproducible random sampling.

Complex vectors are plain 1-D ``complex128`` numpy arrays. Randomness is
drawn from counter-based Philox streams keyed on ``(seed, stream_id)`` so that
every Monte Carlo trial owns an independent, reproducible sequence no matter
which worker evaluates it.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_MASK64 = (1 << 64) - 1

# Sub-stream selectors. Each purpose lives in a disjoint region of the Philox
# counter space, so e.g. resizing the codebook never shifts the channel draws.
CHANNELS = 0
CODEBOOK = 1
RVQ = 2
PILOT = 3


def as_complex_vec(x) -> np.ndarray:
    """Validate and convert ``x`` to a finite 1-D complex vector."""
    v = np.asarray(x, dtype=np.complex128)
    if v.ndim != 1 or v.size == 0:
        raise ValueError(f"expected a non-empty 1-D vector, got shape {v.shape}")
    if not np.all(np.isfinite(v)):
        raise ValueError("vector has non-finite entries")
    return v


@dataclass(frozen=True)
class RandomStream:
    """Deterministic random stream for one trial.

    Identical ``(seed, stream_id)`` pairs give bit-identical samples; distinct
    ids give independent Philox keys.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            val = getattr(self, name)
            if not 0 <= int(val) <= _MASK64:
                raise ValueError(f"{name} must fit in an unsigned 64-bit integer")

    def generator(self, purpose: int = CHANNELS) -> np.random.Generator:
        key = (int(self.stream_id) << 64) | int(self.seed)
        bitgen = np.random.Philox(key=key, counter=int(purpose) << 192)
        return np.random.Generator(bitgen)

    def child(self, stream_id: int) -> "RandomStream":
        return RandomStream(self.seed, stream_id)


def _gen(stream) -> np.random.Generator:
    if isinstance(stream, np.random.Generator):
        return stream
    return stream.generator()


def complex_gaussian(gen: np.random.Generator, shape) -> np.ndarray:
    """i.i.d. CN(0, 1) entries; real and imaginary parts each have variance 1/2.

    The trailing real/imag axis is drawn last so leading-axis prefixes are
    stable: the first ``k`` rows of a ``(n, d)`` draw equal a ``(k, d)`` draw.
    """
    if isinstance(shape, int):
        shape = (shape,)
    z = gen.standard_normal(tuple(shape) + (2,))
    return (z[..., 0] + 1j * z[..., 1]) * np.sqrt(0.5)


def sample_gaussian_vec(stream, dim: int) -> np.ndarray:
    if dim < 1:
        raise ValueError("dim must be >= 1")
    return complex_gaussian(_gen(stream), (dim,))


def haar_unitaries(gen: np.random.Generator, count: int, dim: int) -> np.ndarray:
    """Draw ``count`` Haar-distributed ``dim x dim`` unitaries.

    Returns an array of shape ``(count, dim, dim)`` whose columns are
    orthonormal. Built from the QR factorisation of a complex Ginibre matrix
    with the diagonal phases of ``R`` folded back into ``Q``.
    """
    if dim < 1:
        raise ValueError("dim must be >= 1")
    z = complex_gaussian(gen, (count, dim, dim))
    q, r = np.linalg.qr(z)
    d = np.diagonal(r, axis1=-2, axis2=-1)
    mag = np.abs(d)
    bad = np.any(mag < 1e-12, axis=-1)
    # Singular draws have probability zero; redraw them anyway.
    while np.any(bad):
        idx = np.flatnonzero(bad)
        z = complex_gaussian(gen, (idx.size, dim, dim))
        q[idx], r[idx] = np.linalg.qr(z)
        d = np.diagonal(r, axis1=-2, axis2=-1)
        mag = np.abs(d)
        bad = np.any(mag < 1e-12, axis=-1)
    return q * (d / mag)[..., None, :]


def sample_haar_basis(stream, dim: int) -> list[np.ndarray]:
    """Return ``dim`` orthonormal vectors forming a Haar-random basis."""
    u = haar_unitaries(_gen(stream), 1, dim)[0]
    return [u[:, k].copy() for k in range(dim)]


def random_unit_vectors(gen: np.random.Generator, shape, dim: int) -> np.ndarray:
    """Isotropic unit vectors in C^dim; output shape ``shape + (dim,)``."""
    if isinstance(shape, int):
        shape = (shape,)
    z = complex_gaussian(gen, tuple(shape) + (dim,))
    return z / np.linalg.norm(z, axis=-1, keepdims=True)


def inner_product(a, b) -> complex:
    """``a^H b`` (conjugate-linear in the first argument)."""
    a = np.asarray(a, dtype=np.complex128)
    b = np.asarray(b, dtype=np.complex128)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.vdot(a, b))


def gram(vectors) -> np.ndarray:
    v = np.column_stack([np.asarray(x, dtype=np.complex128) for x in vectors])
    return v.conj().T @ v
