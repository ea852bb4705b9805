"""Weighted, mixed, Fourier-Lebesgue and time-frequency norms of sampled functions.

Conventions:

* ``||v||_{L^q_s} = || v <.>^s ||_{L^q}`` and ``||f||_{FL^q_s} = ||f^||_{L^q_s}``.
* On ``R^d x R^d`` the mixed norms are ``L^{p,q}_1`` (inner ``L^p`` over the first
  variable, outer ``L^q`` over the second) and ``L^{p,q}_2`` (inner ``L^q`` over
  the second, outer ``L^p`` over the first). ``p`` always acts on the first
  variable.
* ``V_phi f(x, xi) = (2 pi)^{-d/2} \\int f(y) conj(phi(y - x)) e^{-i y xi} dy``,
  i.e. the unitary transform of ``f * conj(phi(. - x))``. With this choice
  ``V_phi(f1 f2)(x, .) = (2 pi)^{-d/2} V_phi1 f1(x, .) * V_phi2 f2(x, .)`` for
  ``phi = phi1 phi2``.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .exponents import Exponent, ExponentLike, parse_rational
from .grid import Grid, GridFunction, _same_grid, convolve, dft


class MixedOrder(enum.Enum):
    INNER_FIRST = 1  # L^{p,q}_1
    INNER_SECOND = 2  # L^{p,q}_2


@dataclass(frozen=True, eq=False)
class JointFunction:
    """Samples of ``F(a, b)`` on ``first x second``; values have shape ``first.shape + second.shape``."""

    first: Grid
    second: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        shape = self.first.shape + self.second.shape
        if values.size != int(np.prod(shape)):
            raise ValueError(f"{values.size} samples for a product grid of shape {shape}")
        values = values.reshape(shape)
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    def matrix(self) -> np.ndarray:
        """Values as an ``(n1^d, n2^d)`` matrix."""
        return self.values.reshape(self.first.size, self.second.size)

    def column(self, index) -> GridFunction:
        """``F(a_index, .)`` as a function of the second variable."""
        return GridFunction(self.second, self.values[tuple(index)])

    def transpose(self) -> "JointFunction":
        """``F0(b, a) = F(a, b)``."""
        return JointFunction(self.second, self.first, self.matrix().T)


def _exponent(q: ExponentLike) -> Exponent:
    return Exponent.of(q) if not isinstance(q, Exponent) else q


def _lp_reduce(absvals: np.ndarray, q: Exponent, axes: tuple[int, ...], cell: float) -> np.ndarray:
    """``(cell * sum |.|^q)^{1/q}`` over ``axes``; a maximum when ``q = inf``."""
    if q.is_inf:
        return np.max(absvals, axis=axes)
    if q.recip == 1:
        return cell * np.sum(absvals, axis=axes)
    qf = float(q.value)
    # scale by the maximum to keep large exponents finite
    top = np.max(absvals, axis=axes, keepdims=True)
    top = np.where(top > 0, top, 1.0)
    inner = cell * np.sum((absvals / top) ** qf, axis=axes)
    return np.squeeze(top, axis=axes) * inner ** (1.0 / qf)


def lq_weighted(f: GridFunction, q: ExponentLike, s=0) -> float:
    """``|| f <.>^s ||_{L^q}`` by lattice quadrature over ``f``'s own grid."""
    q = _exponent(q)
    s = float(parse_rational(s))
    weighted = np.abs(f.values)
    if s:
        weighted = weighted * f.grid.bracket() ** s
    return float(_lp_reduce(weighted, q, tuple(range(f.grid.d)), f.grid.cell))


def fl_norm(f: GridFunction, q: ExponentLike, s=0) -> float:
    return lq_weighted(dft(f), q, s)


def mixed_norm(F: JointFunction, p: ExponentLike, q: ExponentLike, order: MixedOrder) -> float:
    """Iterated quadrature norm; ``p`` acts on the first variable, ``q`` on the second."""
    p, q = _exponent(p), _exponent(q)
    d1, d2 = F.first.d, F.second.d
    first_axes = tuple(range(d1))
    second_axes = tuple(range(d1, d1 + d2))
    a = np.abs(F.values)
    if order is MixedOrder.INNER_FIRST:
        inner = _lp_reduce(a, p, first_axes, F.first.cell)
        return float(_lp_reduce(inner, q, tuple(range(d2)), F.second.cell))
    inner = _lp_reduce(a, q, second_axes, F.second.cell)
    return float(_lp_reduce(inner, p, tuple(range(d1)), F.first.cell))


def _window_shifts(phi: GridFunction) -> np.ndarray:
    """``W[k, j] = phi(y_j - x_k)`` on the periodic lattice, flattened."""
    g = phi.grid
    idx = g.indices()
    out = np.empty((g.size, g.size), dtype=complex)
    flat = phi.values
    for k in range(g.size):
        diff = g.wrapped_difference(idx, idx[k])  # y_j - x_k
        out[k] = flat[tuple(diff.T)]
    return out


def stft(f: GridFunction, phi: GridFunction) -> JointFunction:
    """Short-time Fourier transform on ``grid x dual(grid)``."""
    _same_grid(f, phi)
    if not np.any(phi.values):
        raise ValueError("window must not vanish identically")
    g = f.grid
    windows = np.conj(_window_shifts(phi))  # row k: conj(phi(. - x_k))
    prods = windows * f.flat[None, :]
    prods = prods.reshape((g.size,) + g.shape)
    axes = tuple(range(1, g.d + 1))
    raw = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(prods, axes=axes), axes=axes), axes=axes)
    raw *= g.cell / (2 * math.pi) ** (g.d / 2)
    return JointFunction(g, g.dual(), raw.reshape(g.shape + g.shape))


def _weighted_stft(f, phi, s, t) -> JointFunction:
    V = stft(f, phi)
    s, t = float(parse_rational(s)), float(parse_rational(t))
    wx = V.first.bracket() ** t
    wxi = V.second.bracket() ** s
    d = V.first.d
    wx = wx.reshape(wx.shape + (1,) * d)
    return JointFunction(V.first, V.second, np.abs(V.values) * wx * wxi)


def modulation_norm(f, phi, p, q, s=0, t=0) -> float:
    """``M^{p,q}_{s,t}``: ``L^p`` in ``x`` inside, ``L^q`` in ``xi`` outside."""
    return mixed_norm(_weighted_stft(f, phi, s, t), p, q, MixedOrder.INNER_FIRST)


def wiener_norm(f, phi, p, q, s=0, t=0) -> float:
    """``W^{p,q}_{s,t}``: ``L^q`` in ``xi`` inside, ``L^p`` in ``x`` outside."""
    return mixed_norm(_weighted_stft(f, phi, s, t), p, q, MixedOrder.INNER_SECOND)


def stft_product_rhs(f1, phi1, f2, phi2) -> JointFunction:
    """``(2 pi)^{-d/2} (V_phi1 f1(x, .) * V_phi2 f2(x, .))(xi)``, convolution in ``xi`` only."""
    V1, V2 = stft(f1, phi1), stft(f2, phi2)
    g = V1.first
    dual = V1.second
    out = np.empty(V1.values.shape, dtype=complex)
    for k in np.ndindex(*g.shape):
        c = convolve(GridFunction(dual, V1.values[k]), GridFunction(dual, V2.values[k]))
        out[k] = c.values
    return JointFunction(g, dual, out / (2 * math.pi) ** (g.d / 2))


def slice_norms_in_first(V: JointFunction, p: ExponentLike) -> GridFunction:
    """``eta -> || V(., eta) ||_{L^p}``, as a function on the second grid."""
    p = _exponent(p)
    d1 = V.first.d
    vals = _lp_reduce(np.abs(V.values), p, tuple(range(d1)), V.first.cell)
    return GridFunction(V.second, vals)
