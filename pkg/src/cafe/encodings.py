"""Coordinate encodings: Fourier features (random or positional) and
first-kind Chebyshev features.

Coordinates are expected in [-1, 1] per axis. Frequencies are stored in
cycles per unit coordinate, so a Fourier feature is ``sin(2 pi w.x)``.

Feature layouts are blocked: ``[sin(theta_1..M) | cos(theta_1..M)]`` for the
Fourier block and ``[T_0..T_{J-1}(x_1) | ... | T_0..T_{J-1}(x_D)]`` for the
Chebyshev block. When both are present the Fourier block comes first.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import rng
from . import tensor as T
from .errors import DomainError, ShapeError

CHEB_TOLERANCE = 1e-9


@dataclass(frozen=True)
class FrequencyBasis:
    """``omega`` is an (M, D) matrix of frequency rows in cycles/unit."""

    omega: np.ndarray
    kind: str = "explicit"
    scale: float = 0.0
    base: float = 0.0
    seed: int = 0

    def __post_init__(self):
        omega = np.array(self.omega, dtype=np.float64)
        if omega.ndim == 1:
            omega = omega[:, None]
        if omega.ndim != 2 or omega.shape[0] < 1 or omega.shape[1] < 1:
            raise ValueError(f"omega must be a non-empty (M, D) matrix, got shape {omega.shape}")
        if not np.all(np.isfinite(omega)):
            raise ValueError("omega has non-finite entries")
        omega.setflags(write=False)
        object.__setattr__(self, "omega", omega)

    @property
    def M(self) -> int:
        return self.omega.shape[0]

    @property
    def D(self) -> int:
        return self.omega.shape[1]

    @property
    def is_integer(self) -> bool:
        return bool(np.all(self.omega == np.round(self.omega)))


def sample_rff(M: int, D: int, scale: float, seed: int) -> FrequencyBasis:
    """Random Fourier frequencies, i.i.d. N(0, scale^2) per entry."""
    if M < 1 or D < 1:
        raise ValueError(f"need M >= 1 and D >= 1, got M={M}, D={D}")
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    omega = scale * rng.box_muller(rng.stream(seed, "basis"), (M, D))
    return FrequencyBasis(omega, kind="rff", scale=float(scale), seed=int(seed))


def make_pe(M: int, D: int, base: float) -> FrequencyBasis:
    """Axis-aligned geometric frequencies ``base**(i/M) * e_d``.

    Rows are ordered axis-major: all M scales along axis 0, then axis 1, and
    so on, giving M*D rows in total.
    """
    if M < 1 or D < 1:
        raise ValueError(f"need M >= 1 and D >= 1, got M={M}, D={D}")
    if not base > 0:
        raise ValueError(f"base must be positive, got {base}")
    scales = np.array([base ** (i / M) for i in range(M)])
    omega = np.zeros((M * D, D))
    for d in range(D):
        omega[d * M:(d + 1) * M, d] = scales
    return FrequencyBasis(omega, kind="pe", base=float(base))


def explicit_basis(freqs) -> FrequencyBasis:
    """Basis from a given list of frequencies (scalars for D=1, or rows)."""
    return FrequencyBasis(np.asarray(freqs, dtype=np.float64), kind="explicit")


@dataclass(frozen=True)
class FeatureVector:
    """Encoded features plus the ``(name, start, stop)`` extent of each block.

    ``values`` has shape (F,) for one coordinate or (B, F) for a batch.
    """

    values: np.ndarray
    blocks: tuple[tuple[str, int, int], ...]

    @property
    def width(self) -> int:
        return self.values.shape[-1]

    def block(self, name: str) -> tuple[int, int]:
        for n, lo, hi in self.blocks:
            if n == name:
                return lo, hi
        return self.width, self.width

    def masked(self, keep: str | None) -> "FeatureVector":
        """Copy with every block except ``keep`` zeroed (``None`` keeps all)."""
        if keep is None:
            return self
        vals = np.array(self.values, copy=True)
        for name, lo, hi in self.blocks:
            if name != keep:
                vals[..., lo:hi] = 0.0
        return FeatureVector(vals, self.blocks)


def _coords(x, D: int) -> tuple[np.ndarray, bool]:
    arr = np.asarray(x, dtype=np.float64)
    single = arr.ndim <= 1
    arr = np.atleast_1d(arr)
    if single:
        arr = arr[None, :]
    if arr.ndim != 2 or arr.shape[1] != D:
        raise ShapeError(f"coordinates of shape {np.shape(x)} do not match D={D}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("coordinates must be finite")
    return arr, single


def fourier_encode(x, basis: FrequencyBasis) -> FeatureVector:
    """``[sin(2 pi Omega x), cos(2 pi Omega x)]`` for one point or a batch."""
    pts, single = _coords(x, basis.D)
    theta = 2.0 * np.pi * (pts @ basis.omega.T)
    vals = np.concatenate([np.sin(theta), np.cos(theta)], axis=1)
    if single:
        vals = vals[0]
    return FeatureVector(vals, (("ff", 0, 2 * basis.M),))


def fourier_encode_tensor(x: T.Tensor, basis: FrequencyBasis) -> T.Tensor:
    """Differentiable Fourier encoding of a (B, D) coordinate tensor."""
    theta = T.scale(T.matmul(x, T.Tensor(basis.omega.T)), 2.0 * np.pi)
    return T.concat([T.sin(theta), T.cos(theta)])


def chebyshev_table(x: np.ndarray, J: int) -> np.ndarray:
    """T_0..T_{J-1} at every entry of ``x`` via the three-term recursion.

    Returns an array of shape ``x.shape + (J,)``.
    """
    out = np.empty(np.shape(x) + (J,))
    if J == 0:
        return out
    out[..., 0] = 1.0
    if J > 1:
        out[..., 1] = x
    for j in range(2, J):
        out[..., j] = 2.0 * x * out[..., j - 1] - out[..., j - 2]
    return out


def chebyshev_encode(x, J: int, D: int | None = None) -> FeatureVector:
    """Chebyshev features T_0..T_{J-1} per coordinate axis, axis-major.

    Coordinates within 1e-9 outside [-1, 1] are clamped; anything further out
    raises :class:`DomainError`.
    """
    if J < 0:
        raise ValueError(f"Chebyshev order count must be >= 0, got {J}")
    arr = np.asarray(x, dtype=np.float64)
    if D is None:
        D = 1 if arr.ndim == 0 else arr.shape[-1]
    pts, single = _coords(arr, D)
    if np.any(np.abs(pts) > 1.0 + CHEB_TOLERANCE):
        worst = float(np.max(np.abs(pts)))
        raise DomainError(f"Chebyshev features need coordinates in [-1, 1]; got |x| = {worst}")
    pts = np.clip(pts, -1.0, 1.0)
    vals = chebyshev_table(pts, J).reshape(pts.shape[0], D * J)
    if single:
        vals = vals[0]
    return FeatureVector(vals, (("cf", 0, D * J),))


def concat_features(ff: FeatureVector, cf: FeatureVector) -> FeatureVector:
    """Fourier block first, Chebyshev block second."""
    if ff.values.shape[:-1] != cf.values.shape[:-1]:
        raise ShapeError(f"cannot concatenate features {ff.values.shape} and {cf.values.shape}")
    offset = ff.width
    blocks = ff.blocks + tuple((n, lo + offset, hi + offset) for n, lo, hi in cf.blocks)
    return FeatureVector(np.concatenate([ff.values, cf.values], axis=-1), blocks)


def encode(x, basis: FrequencyBasis, J: int) -> FeatureVector:
    """Fourier features, followed by Chebyshev features when ``J > 0``."""
    ff = fourier_encode(x, basis)
    if J == 0:
        return ff
    return concat_features(ff, chebyshev_encode(x, J, basis.D))


def feature_ratio(M: int, D: int, J: int) -> float:
    """Fourier-to-Chebyshev width ratio ``2M / (D J)``; about 3 is a good default."""
    return float("inf") if D * J == 0 else 2 * M / (D * J)

