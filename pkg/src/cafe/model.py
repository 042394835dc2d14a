"""CAFE / CAFE+ coordinate networks.

Features ``phi(x)`` (Fourier, optionally followed by Chebyshev) go through
``N`` parallel affine maps whose outputs are multiplied elementwise::

    psi(x) = H_1(x) * H_2(x) * ... * H_N(x),   H_i(x) = W_i phi(x) + b_i

and ``psi`` feeds a ReLU MLP with ``L_mlp`` hidden layers of width ``D_h``.
With ``N = 0`` the features go straight into the MLP, which is how the plain
RFF / PE baselines and the "Chebyshev-only" ablation are expressed.

Weights are stored as (out, in) matrices.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace
from enum import Enum

import numpy as np

from . import encodings as enc
from . import rng
from . import tensor as T
from .errors import ConfigError, ShapeError

ENCODERS = ("rff", "pe", "chebyshev", "cafe", "cafeplus")


class FeatureMask(str, Enum):
    """Which feature block survives at inference time."""

    NONE = "none"
    FF_ONLY = "ff_only"
    CF_ONLY = "cf_only"

    @property
    def keep(self) -> str | None:
        return {"none": None, "ff_only": "ff", "cf_only": "cf"}[self.value]


@dataclass(frozen=True)
class ModelSpec:
    """Architecture of one coordinate network.

    ``encoder`` picks the structure: ``rff``/``pe`` are Fourier features into
    the MLP; ``chebyshev`` is Fourier plus Chebyshev features into the MLP;
    ``cafe`` and ``cafeplus`` insert the parallel Hadamard stack, without and
    with Chebyshev features. ``fourier`` picks how the frequencies are made
    for the last three (``rff`` or ``pe``).
    """

    encoder: str = "cafeplus"
    D: int = 2
    M: int = 24
    J: int = 16
    N: int = 3
    D_h: int = 64
    L_mlp: int = 1
    out_dim: int = 1
    scale: float = 30.0
    base: float = 2.0
    fourier: str = "rff"
    seed: int = 0

    def validate(self) -> "ModelSpec":
        if self.encoder not in ENCODERS:
            raise ConfigError(f"unknown encoder {self.encoder!r}; expected one of {ENCODERS}")
        if self.fourier not in ("rff", "pe"):
            raise ConfigError(f"fourier must be 'rff' or 'pe', got {self.fourier!r}")
        for name in ("D", "M", "D_h", "out_dim"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1, got {getattr(self, name)}")
        if self.L_mlp < 0 or self.J < 0 or self.N < 0:
            raise ConfigError("L_mlp, J and N must be non-negative")
        if self.encoder in ("cafe", "cafeplus") and self.N < 1:
            raise ConfigError(f"encoder {self.encoder} needs N >= 1, got N={self.N}")
        if self.encoder in ("rff", "pe", "chebyshev") and self.N != 0:
            raise ConfigError(f"encoder {self.encoder} has no parallel stack; N must be 0")
        if self.encoder in ("chebyshev", "cafeplus") and self.J < 1:
            raise ConfigError(f"encoder {self.encoder} needs J >= 1, got J={self.J}")
        if self.encoder in ("rff", "pe", "cafe") and self.J != 0:
            raise ConfigError(f"encoder {self.encoder} uses no Chebyshev features; J must be 0")
        if self.fourier == "rff" and not self.scale > 0:
            raise ConfigError(f"scale must be positive, got {self.scale}")
        if self.fourier == "pe" and not self.base > 0:
            raise ConfigError(f"base must be positive, got {self.base}")
        if self.encoder == "pe" and self.fourier != "pe":
            return replace(self, fourier="pe").validate()
        return self

    def make_basis(self) -> enc.FrequencyBasis:
        if self.fourier == "pe":
            return enc.make_pe(self.M, self.D, self.base)
        return enc.sample_rff(self.M, self.D, self.scale, self.seed)

    def as_dict(self) -> dict:
        return asdict(self)


def stack_param_count(F: int, D_h: int, N: int) -> int:
    return N * (F * D_h + D_h)


def mlp_param_count(in_width: int, D_h: int, L_mlp: int, out_dim: int) -> int:
    widths = [in_width] + [D_h] * L_mlp + [out_dim]
    return sum(a * b + b for a, b in zip(widths[:-1], widths[1:]))


def closed_form_params(F: int, D_h: int, N: int, L_mlp: int, out_dim: int) -> int:
    """Parameter count ``N (F D_h + D_h)`` plus the MLP's weights and biases."""
    in_width = D_h if N > 0 else F
    return stack_param_count(F, D_h, N) + mlp_param_count(in_width, D_h, L_mlp, out_dim)


class CafeModel:
    """Frequency basis, parallel stack and backbone MLP of one network."""

    def __init__(self, spec: ModelSpec, basis: enc.FrequencyBasis,
                 stack: list[tuple[T.Tensor, T.Tensor]], mlp: list[tuple[T.Tensor, T.Tensor]]):
        self.spec = spec
        self.basis = basis
        self.stack = stack
        self.mlp = mlp

    @property
    def D(self) -> int:
        return self.basis.D

    @property
    def F(self) -> int:
        return 2 * self.basis.M + self.D * self.spec.J

    @property
    def N(self) -> int:
        return len(self.stack)

    def parameters(self) -> list[T.Tensor]:
        """Stack ``W_1, b_1, ..., W_N, b_N`` then MLP layers, in that order."""
        out = []
        for w, b in self.stack + self.mlp:
            out += [w, b]
        return out

    def set_parameters(self, arrays) -> None:
        params = self.parameters()
        arrays = list(arrays)
        if len(arrays) != len(params):
            raise ShapeError(f"expected {len(params)} parameter arrays, got {len(arrays)}")
        for p, a in zip(params, arrays):
            a = np.asarray(a, dtype=np.float64)
            if a.shape != p.shape:
                raise ShapeError(f"parameter shape {p.shape} does not match {a.shape}")
            p.data = a

    def copy(self) -> "CafeModel":
        dup = lambda layers: [(T.Tensor(w.data.copy(), True), T.Tensor(b.data.copy(), True))
                              for w, b in layers]
        return CafeModel(self.spec, self.basis, dup(self.stack), dup(self.mlp))

    def features(self, x, mask: FeatureMask | str = FeatureMask.NONE) -> enc.FeatureVector:
        fv = enc.encode(x, self.basis, self.spec.J)
        return fv.masked(FeatureMask(mask).keep)

    def psi(self, phi: T.Tensor) -> T.Tensor:
        """Hadamard product of the parallel affine maps (identity when N = 0)."""
        if not self.stack:
            return phi
        return T.hadamard_all([T.linear(phi, w, b) for w, b in self.stack])

    def head(self, z: T.Tensor) -> T.Tensor:
        for w, b in self.mlp[:-1]:
            z = T.relu(T.linear(z, w, b))
        w, b = self.mlp[-1]
        return T.linear(z, w, b)

    def forward_features(self, phi) -> T.Tensor:
        """Network output for a precomputed (B, F) feature matrix."""
        phi = phi if isinstance(phi, T.Tensor) else T.Tensor(phi)
        if phi.data.ndim != 2 or phi.shape[1] != self.F:
            raise ShapeError(f"features of shape {phi.shape} do not match F={self.F}")
        return self.head(self.psi(phi))

    def __call__(self, x, mask: FeatureMask | str = FeatureMask.NONE) -> np.ndarray:
        return model_forward(np.atleast_2d(x), self, mask).data


def init_model(spec: ModelSpec, basis: enc.FrequencyBasis | None = None) -> CafeModel:
    """Build a model with seeded initial parameters.

    Parallel-stack weights are U(-1/sqrt(F), 1/sqrt(F)) and biases
    U(0.9, 1.1), so each factor starts near 1 and the product keeps the
    first-order frequency terms. MLP weights are U(-1/sqrt(fan_in),
    1/sqrt(fan_in)) with zero biases. ``basis`` overrides the one ``spec``
    would sample, e.g. for integer-frequency analysis.
    """
    spec = spec.validate()
    if basis is None:
        basis = spec.make_basis()
    if basis.D != spec.D:
        raise ShapeError(f"basis has D={basis.D} but spec has D={spec.D}")
    F = 2 * basis.M + spec.D * spec.J
    gen = rng.stream(spec.seed, "init")
    param = lambda a: T.Tensor(a, requires_grad=True)

    stack = []
    lim = 1.0 / np.sqrt(F)
    for _ in range(spec.N):
        w = rng.uniform(gen, -lim, lim, (spec.D_h, F))
        b = rng.uniform(gen, 0.9, 1.1, (spec.D_h,))
        stack.append((param(w), param(b)))

    widths = [spec.D_h if spec.N > 0 else F] + [spec.D_h] * spec.L_mlp + [spec.out_dim]
    mlp = []
    for fan_in, fan_out in zip(widths[:-1], widths[1:]):
        lim = 1.0 / np.sqrt(fan_in)
        mlp.append((param(rng.uniform(gen, -lim, lim, (fan_out, fan_in))), param(np.zeros(fan_out))))
    return CafeModel(spec, basis, stack, mlp)


def encode_cafe(x, model: CafeModel, mask: FeatureMask | str = FeatureMask.NONE) -> np.ndarray:
    """``psi(x)`` for one coordinate (returns (D_h,)) or a batch ((B, D_h))."""
    fv = model.features(x, mask)
    single = fv.values.ndim == 1
    psi = model.psi(T.Tensor(np.atleast_2d(fv.values))).data
    return psi[0] if single else psi


def model_forward(x_batch, model: CafeModel, mask: FeatureMask | str = FeatureMask.NONE) -> T.Tensor:
    """Differentiable predictions (B, out_dim) for a batch of coordinates."""
    fv = model.features(np.asarray(x_batch, dtype=np.float64), mask)
    return model.forward_features(T.Tensor(np.atleast_2d(fv.values)))


def count_params(model: CafeModel) -> int:
    return int(sum(p.size for p in model.parameters()))


def depth_for_budget(spec: ModelSpec, target: int, F: int | None = None, max_depth: int = 16) -> int:
    """MLP hidden-layer count whose total parameter count is closest to ``target``."""
    if F is None:
        F = 2 * spec.M * (spec.D if spec.fourier == "pe" else 1) + spec.D * spec.J
    counts = [abs(closed_form_params(F, spec.D_h, spec.N, L, spec.out_dim) - target)
              for L in range(max_depth + 1)]
    return int(np.argmin(counts))


@dataclass(frozen=True)
class PairwiseExpansion:
    """Product-to-sum view of one (sine/cosine i) x (sine/cosine m) pairing.

    For two parallel layers and output unit ``j`` the product of the
    frequency-``i`` part of layer 1 with the frequency-``m`` part of layer 2 is
    ``1/2 [(Ca+Cb) cos(ti-tm) + (Cb-Ca) cos(ti+tm) + (Cc-Cd) sin(ti-tm)
    + (Cc+Cd) sin(ti+tm)]``.
    """

    Ca: float
    Cb: float
    Cc: float
    Cd: float
    w1s: float
    w1c: float
    w2s: float
    w2c: float

    @property
    def coeffs(self) -> tuple[float, float, float, float]:
        return self.Ca, self.Cb, self.Cc, self.Cd

    def reconstruct(self, theta_i, theta_m):
        d = np.asarray(theta_i) - np.asarray(theta_m)
        s = np.asarray(theta_i) + np.asarray(theta_m)
        return 0.5 * ((self.Ca + self.Cb) * np.cos(d) + (self.Cb - self.Ca) * np.cos(s)
                      + (self.Cc - self.Cd) * np.sin(d) + (self.Cc + self.Cd) * np.sin(s))

    def direct(self, theta_i, theta_m):
        h1 = self.w1s * np.sin(theta_i) + self.w1c * np.cos(theta_i)
        h2 = self.w2s * np.sin(theta_m) + self.w2c * np.cos(theta_m)
        return h1 * h2


def pairwise_expansion_coeffs(model: CafeModel, j: int, i: int, m: int) -> PairwiseExpansion:
    """Coefficients ``Ca..Cd`` linking Fourier frequencies ``i`` and ``m`` at unit ``j``."""
    if model.N != 2:
        raise ValueError(f"pairwise expansion needs exactly 2 parallel layers, model has {model.N}")
    M = model.basis.M
    if not (0 <= i < M and 0 <= m < M):
        raise IndexError(f"frequency indices ({i}, {m}) out of range for M={M}")
    w1, w2 = model.stack[0][0].data, model.stack[1][0].data
    w1s, w1c = float(w1[j, i]), float(w1[j, M + i])
    w2s, w2c = float(w2[j, m]), float(w2[j, M + m])
    return PairwiseExpansion(Ca=w1s * w2s, Cb=w1c * w2c, Cc=w1s * w2c, Cd=w1c * w2s,
                             w1s=w1s, w1c=w1c, w2s=w2s, w2c=w2c)
