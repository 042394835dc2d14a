"""Exact frequency bookkeeping for Hadamard-fused Fourier and Chebyshev features.

Three independent views of the same question, "which frequencies can the
encoder produce?":

* combinatorial: enumerate signed sums of base frequencies
  (:func:`enumerate_cafe_frequencies`) or of Chebyshev orders
  (:func:`cheb_power_orders`);
* symbolic: multiply sparse trigonometric / Chebyshev series exactly with
  product-to-sum rules (:func:`expand_cafe_symbolically`);
* numeric: sample a model on one period and take a direct DFT
  (:func:`empirical_spectrum_dft`).

Frequencies are integer vectors with a canonical sign: the first non-zero
component is positive. ``w`` and ``-w`` carry the same magnitude spectrum, and
``sin(-t) = -sin(t)`` is folded into the sine coefficient.

The module also computes empirical neural tangent kernels (:func:`compute_ntk`).
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Iterable

import numpy as np
from numpy.polynomial import chebyshev as npcheb

from . import tensor as T
from .errors import BudgetExceeded, ShapeError
from .model import CafeModel, pairwise_expansion_coeffs

PRUNE = 1e-14
DEFAULT_BUDGET = 10**7

Freq = tuple[int, ...]


def canonical(vec) -> Freq:
    """Integer frequency vector with its first non-zero component positive."""
    v = tuple(int(c) for c in np.atleast_1d(vec))
    for c in v:
        if c != 0:
            return v if c > 0 else tuple(-x for x in v)
    return v


def _is_flipped(vec) -> bool:
    for c in vec:
        if c != 0:
            return c < 0
    return False


def as_freq_list(base) -> list[Freq]:
    """Normalise scalars / rows / a FrequencyBasis to integer tuples."""
    omega = getattr(base, "omega", base)
    arr = np.asarray(omega, dtype=np.float64)
    if arr.ndim == 0:
        arr = arr[None]
    if arr.ndim == 1:
        arr = arr[:, None]
    if arr.size == 0:
        raise ValueError("frequency base must be non-empty")
    if not np.all(arr == np.round(arr)):
        raise ValueError("frequency oracle needs integer frequencies")
    return [tuple(int(c) for c in row) for row in np.round(arr).astype(np.int64)]


def format_freqs(freqs: Iterable[Freq]) -> str:
    items = sorted(freqs)
    if items and len(items[0]) == 1:
        return "{" + ",".join(str(f[0]) for f in items) + "}"
    return "{" + ", ".join("(" + ",".join(map(str, f)) + ")" for f in items) + "}"


# ---------------------------------------------------------------------------
# combinatorial enumeration


@dataclass(frozen=True)
class CafeSpectrum:
    """Both constructions of the admissible set for ``N`` parallel layers.

    ``signed_form``: every ``sum_i s_i w_{k_i}`` with ``s_i`` in {-1, 0, +1}.
    ``union_form``: union over I = 0..N of sums of exactly I terms with
    ``s_i`` in {-1, +1}; the I = 0 term is the all-bias product at frequency 0.
    """

    signed_form: frozenset
    union_form: frozenset
    base: tuple
    N: int

    @property
    def frequencies(self) -> frozenset:
        return self.signed_form

    def sorted(self) -> list[Freq]:
        return sorted(self.signed_form)


def cafe_enumeration_size(M: int, N: int) -> int:
    return M**N * 3 ** (N - 1)


def signed_form(base: list[Freq], N: int) -> frozenset:
    D = len(base[0])
    B = np.array(base, dtype=np.int64)
    signs = np.array(list(itertools.product((-1, 0, 1), repeat=N)), dtype=np.int64)
    out = set()
    for ks in itertools.product(range(len(base)), repeat=N):
        sums = signs @ B[list(ks)]  # (3^N, D)
        out.update(canonical(s) for s in np.unique(sums.reshape(-1, D), axis=0))
    return frozenset(out)


def union_form(base: list[Freq], N: int, include_dc: bool = True) -> frozenset:
    """Union over term counts I of ``{sum of I signed base frequencies}``.

    With ``include_dc`` the I = 0 term (frequency 0) is part of the union; the
    bias-only product always contributes it.
    """
    D = len(base[0])
    out = {tuple([0] * D)} if include_dc else set()
    B = np.array(base, dtype=np.int64)
    for I in range(1, N + 1):
        signs = np.array(list(itertools.product((-1, 1), repeat=I)), dtype=np.int64)
        for ks in itertools.product(range(len(base)), repeat=I):
            sums = signs @ B[list(ks)]
            out.update(canonical(s) for s in sums)
    return frozenset(out)


def enumerate_cafe_frequencies(base, N: int, budget: int = DEFAULT_BUDGET) -> CafeSpectrum:
    """Admissible output frequencies of an ``N``-layer Hadamard stack.

    Builds the set two ways (signed sums with zeros allowed, and a union over
    the number of contributing layers) and raises ``AssertionError`` if they
    disagree.
    """
    freqs = as_freq_list(base)
    if N < 1:
        raise ValueError(f"N must be >= 1, got {N}")
    size = cafe_enumeration_size(len(freqs), N)
    if size > budget:
        raise BudgetExceeded(f"|base|^N * 3^(N-1) = {size} exceeds budget {budget}")
    a = signed_form(freqs, N)
    b = union_form(freqs, N)
    if a != b:
        raise AssertionError(f"set constructions disagree: signed-only {sorted(a - b)}, "
                             f"union-only {sorted(b - a)}")
    return CafeSpectrum(a, b, tuple(freqs), N)


def bounded_integer_combinations(base, max_l1: int) -> frozenset:
    """``{canonical(sum_t c_t w_t) : c_t integer, sum |c_t| <= max_l1}``.

    This is the admissible-frequency bound for a Fourier-feature MLP whose
    activations are polynomials of degree K and depth L, with
    ``max_l1 = K**(L-1)``.
    """
    freqs = as_freq_list(base)
    D = len(freqs[0])
    frontier = {tuple([0] * D)}
    reached = set(frontier)
    for _ in range(max_l1):
        nxt = set()
        for s in frontier:
            for w in freqs:
                nxt.add(tuple(a + b for a, b in zip(s, w)))
                nxt.add(tuple(a - b for a, b in zip(s, w)))
        frontier = nxt - reached
        reached |= nxt
    return frozenset(canonical(s) for s in reached)


@dataclass(frozen=True)
class ChebPowerOrders:
    """Orders reached by the k-th power of a Chebyshev series on ``J``."""

    orders: frozenset
    bound: frozenset
    J: frozenset
    k: int


def cheb_power_orders(J: Iterable[int], k: int) -> ChebPowerOrders:
    """Recursive order set ``S_k`` and the integer-combination bound.

    ``S_1 = J``; ``S_{k+1} = {h + j, |h - j| : h in S_k, j in J}``. The bound
    is ``{|sum_j c_j j| : sum |c_j| <= k}``; ``AssertionError`` if ``S_k`` is
    not contained in it.
    """
    J = frozenset(int(j) for j in J)
    if k < 1:
        raise ValueError(f"power k must be >= 1, got {k}")
    if any(j < 0 for j in J):
        raise ValueError("Chebyshev orders must be non-negative")
    S = set(J)
    for _ in range(k - 1):
        S = {h + j for h in S for j in J} | {abs(h - j) for h in S for j in J}
    bound = frozenset(abs(c[0]) for c in bounded_integer_combinations(sorted(J), k)) if J else frozenset({0})
    S = frozenset(S)
    if not S <= bound:
        raise AssertionError(f"orders {sorted(S - bound)} escape the combination bound")
    return ChebPowerOrders(S, bound, J, k)


def chebyshev_mlp_order_bound(J: Iterable[int], K: int, L: int) -> frozenset:
    """Orders a depth-``L`` MLP with degree-``K`` polynomial activations can reach."""
    return frozenset(abs(c[0]) for c in bounded_integer_combinations(sorted(set(J)), K ** (L - 1)))


# ---------------------------------------------------------------------------
# sparse Chebyshev series


@dataclass
class SparseChebPoly:
    """``sum_j coeffs[j] T_j(x)``; entries with ``|c| < 1e-14`` are dropped."""

    coeffs: dict[int, float] = field(default_factory=dict)

    def __post_init__(self):
        self.coeffs = {int(j): float(c) for j, c in self.coeffs.items() if abs(c) >= PRUNE}
        if any(j < 0 for j in self.coeffs):
            raise ValueError("Chebyshev orders must be non-negative")

    @property
    def support(self) -> frozenset:
        return frozenset(self.coeffs)

    def __call__(self, x) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if not self.coeffs:
            return np.zeros_like(x)
        dense = np.zeros(max(self.coeffs) + 1)
        for j, c in self.coeffs.items():
            dense[j] = c
        return npcheb.chebval(x, dense)

    def __mul__(self, other: "SparseChebPoly") -> "SparseChebPoly":
        return symbolic_cheb_multiply(self, other)


def symbolic_cheb_multiply(p: SparseChebPoly, q: SparseChebPoly) -> SparseChebPoly:
    """Exact product via ``T_a T_b = (T_{a+b} + T_{|a-b|}) / 2``."""
    out: dict[int, float] = {}
    for a, ca in sorted(p.coeffs.items()):
        for b, cb in sorted(q.coeffs.items()):
            half = 0.5 * ca * cb
            out[a + b] = out.get(a + b, 0.0) + half
            out[abs(a - b)] = out.get(abs(a - b), 0.0) + half
    return SparseChebPoly(out)


def cheb_product_index_set(P: Iterable[int], Q: Iterable[int]) -> frozenset:
    """``{p + q, |p - q|}`` over all pairs: where a product's orders may land."""
    return frozenset(h for p in P for q in Q for h in (p + q, abs(p - q)))


# ---------------------------------------------------------------------------
# sparse trigonometric series


@dataclass
class SparseTrigPoly:
    """``sum_w s_w sin(2 pi w.x) + c_w cos(2 pi w.x)`` over canonical integer ``w``.

    ``terms`` maps a frequency tuple to ``(sin_coeff, cos_coeff)``. The sine
    coefficient of the zero frequency is always 0.
    """

    D: int = 1
    terms: dict = field(default_factory=dict)

    def __post_init__(self):
        clean = {}
        for w, (s, c) in self.terms.items():
            w = tuple(int(v) for v in w)
            if len(w) != self.D:
                raise ShapeError(f"frequency {w} does not have dimension {self.D}")
            if _is_flipped(w):
                w, s = canonical(w), -s
            if not any(w):
                s = 0.0
            s0, c0 = clean.get(w, (0.0, 0.0))
            clean[w] = (s0 + s, c0 + c)
        self.terms = {w: (s if abs(s) >= PRUNE else 0.0, c if abs(c) >= PRUNE else 0.0)
                      for w, (s, c) in clean.items()
                      if abs(s) >= PRUNE or abs(c) >= PRUNE}

    @classmethod
    def constant(cls, value: float, D: int = 1) -> "SparseTrigPoly":
        return cls(D, {tuple([0] * D): (0.0, float(value))})

    @classmethod
    def sin_term(cls, freq, coeff: float = 1.0) -> "SparseTrigPoly":
        w = tuple(int(v) for v in np.atleast_1d(freq))
        return cls(len(w), {w: (float(coeff), 0.0)})

    @classmethod
    def cos_term(cls, freq, coeff: float = 1.0) -> "SparseTrigPoly":
        w = tuple(int(v) for v in np.atleast_1d(freq))
        return cls(len(w), {w: (0.0, float(coeff))})

    @property
    def support(self) -> frozenset:
        return frozenset(self.terms)

    def __add__(self, other: "SparseTrigPoly") -> "SparseTrigPoly":
        merged = dict(self.terms)
        for w, (s, c) in other.terms.items():
            s0, c0 = merged.get(w, (0.0, 0.0))
            merged[w] = (s0 + s, c0 + c)
        return SparseTrigPoly(self.D, merged)

    def scaled(self, a: float) -> "SparseTrigPoly":
        return SparseTrigPoly(self.D, {w: (a * s, a * c) for w, (s, c) in self.terms.items()})

    def __mul__(self, other: "SparseTrigPoly") -> "SparseTrigPoly":
        return symbolic_trig_multiply(self, other)

    def __call__(self, x) -> np.ndarray:
        pts = np.asarray(x, dtype=np.float64)
        if pts.ndim <= 1:
            pts = pts.reshape(-1, self.D) if self.D > 1 else pts.reshape(-1, 1)
        out = np.zeros(pts.shape[0])
        for w, (s, c) in self.terms.items():
            theta = 2.0 * np.pi * (pts @ np.array(w, dtype=np.float64))
            out += s * np.sin(theta) + c * np.cos(theta)
        return out


def symbolic_trig_multiply(p: SparseTrigPoly, q: SparseTrigPoly) -> SparseTrigPoly:
    """Exact product using the product-to-sum identities.

    sin A sin B = (cos(A-B) - cos(A+B)) / 2,  cos A cos B = (cos(A-B) + cos(A+B)) / 2,
    sin A cos B = (sin(A+B) + sin(A-B)) / 2,  cos A sin B = (sin(A+B) - sin(A-B)) / 2.
    """
    if p.D != q.D:
        raise ShapeError(f"cannot multiply trig polys of dimension {p.D} and {q.D}")
    acc: dict = {}

    def put(w, s, c):
        s0, c0 = acc.get(w, (0.0, 0.0))
        acc[w] = (s0 + s, c0 + c)

    for a, (sa, ca) in p.terms.items():
        for b, (sb, cb) in q.terms.items():
            plus = tuple(x + y for x, y in zip(a, b))
            minus = tuple(x - y for x, y in zip(a, b))
            # cos(A-B), cos(A+B)
            put(minus, 0.0, 0.5 * (sa * sb + ca * cb))
            put(plus, 0.0, 0.5 * (ca * cb - sa * sb))
            # sin(A+B), sin(A-B)
            put(plus, 0.5 * (sa * cb + ca * sb), 0.0)
            put(minus, 0.5 * (sa * cb - ca * sb), 0.0)
    return SparseTrigPoly(p.D, acc)


def _require_integer_cafe(model: CafeModel) -> list[Freq]:
    if model.spec.J != 0:
        raise ValueError("symbolic and DFT analysis need a model without Chebyshev features (J = 0)")
    if model.N < 1:
        raise ValueError("model has no parallel stack")
    if not model.basis.is_integer:
        raise ValueError("symbolic and DFT analysis need integer frequencies")
    return as_freq_list(model.basis)


def layer_trig_polys(model: CafeModel, layer: int) -> list[SparseTrigPoly]:
    """``H_layer`` as one trig series per output unit."""
    freqs = _require_integer_cafe(model)
    M, D = len(freqs), model.D
    w, b = model.stack[layer][0].data, model.stack[layer][1].data
    out = []
    for j in range(w.shape[0]):
        terms: dict = {tuple([0] * D): (0.0, float(b[j]))}
        for i, f in enumerate(freqs):
            s0, c0 = terms.get(f, (0.0, 0.0))
            terms[f] = (s0 + float(w[j, i]), c0 + float(w[j, M + i]))
        out.append(SparseTrigPoly(D, terms))
    return out


def expand_cafe_symbolically(model: CafeModel, budget: int = DEFAULT_BUDGET) -> list[SparseTrigPoly]:
    """Exact trig series of every ``psi`` coordinate of an integer-frequency model.

    Raises ``AssertionError`` if any support escapes the enumerated
    admissible set.
    """
    freqs = _require_integer_cafe(model)
    terms_bound = (2 * len(freqs) + 1) ** model.N
    if terms_bound > budget:
        raise BudgetExceeded(f"(2M+1)^N = {terms_bound} exceeds budget {budget}")
    layers = [layer_trig_polys(model, i) for i in range(model.N)]
    polys = []
    for j in range(model.spec.D_h):
        p = layers[0][j]
        for layer in layers[1:]:
            p = p * layer[j]
        polys.append(p)
    admissible = enumerate_cafe_frequencies(freqs, model.N, budget).frequencies
    for j, p in enumerate(polys):
        if not p.support <= admissible:
            raise AssertionError(f"unit {j}: frequencies {sorted(p.support - admissible)} "
                                 "are outside the admissible set")
    return polys


def full_pairwise_reconstruction(model: CafeModel, j: int, x) -> np.ndarray:
    """``psi_j(x)`` for a two-layer stack rebuilt from pairwise coefficients.

    Sums the product-to-sum reconstruction over every frequency pair (i, m),
    then adds the bias cross terms ``b1 h2 + b2 h1 + b1 b2``.
    """
    if model.N != 2 or model.spec.J != 0:
        raise ValueError("pairwise reconstruction needs N = 2 and J = 0")
    pts = np.atleast_2d(np.asarray(x, dtype=np.float64))
    theta = 2.0 * np.pi * (pts @ model.basis.omega.T)  # (B, M)
    M = model.basis.M
    total = np.zeros(pts.shape[0])
    for i in range(M):
        for m in range(M):
            total += pairwise_expansion_coeffs(model, j, i, m).reconstruct(theta[:, i], theta[:, m])
    (w1, b1), (w2, b2) = [(w.data, b.data) for w, b in model.stack]
    lin1 = np.sin(theta) @ w1[j, :M] + np.cos(theta) @ w1[j, M:]
    lin2 = np.sin(theta) @ w2[j, :M] + np.cos(theta) @ w2[j, M:]
    return total + b1[j] * lin2 + b2[j] * lin1 + b1[j] * b2[j]


# ---------------------------------------------------------------------------
# empirical spectrum


def dft(samples: np.ndarray) -> np.ndarray:
    """Direct DFT of the last axis, bins 0..G//2 (non-negative frequencies)."""
    samples = np.asarray(samples, dtype=np.float64)
    G = samples.shape[-1]
    k = np.arange(G // 2 + 1)[:, None]
    g = np.arange(G)[None, :]
    kernel = np.exp(-2j * np.pi * ((k * g) % G) / G)
    return samples @ kernel.T


@dataclass(frozen=True)
class DftSpectrum:
    """Active DFT bins of every ``psi`` coordinate and the oracle set."""

    active: tuple[frozenset, ...]
    oracle: frozenset
    magnitudes: np.ndarray

    @property
    def union(self) -> frozenset:
        return frozenset().union(*self.active) if self.active else frozenset()

    @property
    def contained(self) -> bool:
        return all(a <= self.oracle for a in self.active)


def empirical_spectrum_dft(model: CafeModel, G: int, rel_threshold: float = 1e-8,
                           strict: bool = False) -> DftSpectrum:
    """Sample ``psi`` on ``G`` points of one period and list non-zero DFT bins.

    A bin is active when its magnitude exceeds ``rel_threshold`` times the
    largest bin of the same coordinate. ``strict`` raises ``AssertionError``
    when a bin falls outside the admissible set.
    """
    freqs = _require_integer_cafe(model)
    if model.D != 1:
        raise ValueError("empirical spectrum is defined for 1-D inputs")
    top = model.N * max(abs(f[0]) for f in freqs)
    if G <= 2 * top:
        raise ValueError(f"grid size {G} aliases: need G > 2 * {top}")
    x = (np.arange(G) / G)[:, None]
    psi = model.psi(T.Tensor(model.features(x).values)).data  # (G, D_h)
    mags = np.abs(dft(psi.T))  # (D_h, G//2+1)
    active = []
    for row in mags:
        peak = row.max()
        active.append(frozenset() if peak == 0 else frozenset(int(k) for k in np.nonzero(row > rel_threshold * peak)[0]))
    oracle = frozenset(f[0] for f in enumerate_cafe_frequencies(freqs, model.N).frequencies)
    out = DftSpectrum(tuple(active), oracle, mags)
    if strict and not out.contained:
        raise AssertionError(f"DFT bins {sorted(out.union - oracle)} are outside {sorted(oracle)}")
    return out


def band_energy_fraction(signal: np.ndarray, cutoff: int, include_dc: bool = False) -> tuple[float, float]:
    """Fractions of DFT energy in bins ``< cutoff`` and ``>= cutoff``.

    Energy counts each non-negative bin once. The DC bin is left out unless
    ``include_dc``.
    """
    power = np.abs(dft(np.asarray(signal, dtype=np.float64))) ** 2
    if not include_dc:
        power = power[1:]
        cutoff -= 1
    total = power.sum()
    if total == 0:
        return 0.0, 0.0
    return float(power[:cutoff].sum() / total), float(power[cutoff:].sum() / total)


# ---------------------------------------------------------------------------
# neural tangent kernel


@dataclass(frozen=True)
class NtkMatrix:
    K: np.ndarray

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(0.5 * (self.K + self.K.T))

    def asymmetry(self) -> float:
        return float(np.max(np.abs(self.K - self.K.T))) if self.K.size else 0.0

    def is_symmetric(self, tol: float = 1e-10) -> bool:
        return self.asymmetry() <= tol

    def is_psd(self, rel: float = 1e-8) -> bool:
        ev = self.eigenvalues()
        return bool(ev.min() >= -rel * max(ev.max(), 0.0))

    def condition_number(self) -> float:
        ev = self.eigenvalues()
        return float(ev.max() / ev.min()) if ev.min() > 0 else float("inf")


def parameter_jacobian(model: CafeModel, inputs) -> np.ndarray:
    """(B, P) matrix of output gradients, one backward pass per input."""
    pts = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    params = model.parameters()
    rows = []
    for x in pts:
        phi = T.Tensor(model.features(x[None, :]).values)
        out = model.forward_features(phi)
        grads = T.grads_for(params, T.tensor_sum(out))
        rows.append(np.concatenate([g.reshape(-1) for g in grads]))
    return np.array(rows)


def compute_ntk(model: CafeModel, inputs, max_inputs: int = 256, max_params: int = 10_000) -> NtkMatrix:
    """Empirical NTK ``K[a, b] = <grad f(x_a), grad f(x_b)>`` of a scalar-output model."""
    if model.spec.out_dim != 1:
        raise ValueError("NTK needs a scalar-output model")
    pts = np.atleast_2d(np.asarray(inputs, dtype=np.float64))
    P = sum(p.size for p in model.parameters())
    if pts.shape[0] > max_inputs or P > max_params:
        raise BudgetExceeded(f"NTK of {pts.shape[0]} inputs x {P} parameters exceeds "
                             f"budget ({max_inputs} x {max_params})")
    jac = parameter_jacobian(model, pts)
    return NtkMatrix(jac @ jac.T)

