"""Weighted bilinear convolution maps and the five-region kernel decomposition.

``T_F(f, g)(xi) = \\int F(xi, eta) f(eta) g(xi - eta) d eta`` and
``T_{Theta F}(f, g)(xi) = \\int F(xi, eta) f(xi - eta) g(eta) d eta`` are
realized on a lattice by ``h^d``-weighted sums, with ``xi - eta`` taken modulo
the period so that ``F = 1`` reproduces :func:`flmult.grid.convolve` exactly.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Optional, Sequence, Union

import numpy as np
from scipy import integrate

from .exponents import Exponent, ExponentLike, ExponentTriple, dual, parse_rational, r_functional
from .grid import Grid, GridFunction, _same_grid, bracket, convolve, dft, idft, pointwise_product, sample
from .norms import JointFunction, _exponent, _lp_reduce, lq_weighted

REGIONS = (1, 2, 3, 4, 5)


@dataclass(frozen=True)
class KernelParams:
    """Exponents of ``F(xi, eta) = <xi>^{s0} <xi - eta>^{-s1} <eta>^{-s2}``."""

    s0: Fraction
    s1: Fraction
    s2: Fraction
    d: int = 1

    def __post_init__(self):
        for name in ("s0", "s1", "s2"):
            object.__setattr__(self, name, parse_rational(getattr(self, name)))
        if self.d < 1:
            raise ValueError("dimension must be >= 1")

    @classmethod
    def of(cls, s: Sequence, d: int = 1) -> "KernelParams":
        return cls(*s, d=d)

    @property
    def floats(self) -> tuple[float, float, float]:
        return (float(self.s0), float(self.s1), float(self.s2))


@dataclass(frozen=True)
class OmegaParams:
    delta: float = 0.5
    r_rad: float = 8.0
    modified_omega2: bool = False

    def __post_init__(self):
        if not 0 < self.delta < 1:
            raise ValueError(f"delta must lie in (0, 1), got {self.delta}")
        if self.r_rad < 4 / self.delta:
            raise ValueError(f"r_rad = {self.r_rad} is below 4/delta = {4 / self.delta}")


# --- kernel ------------------------------------------------------------------


def _kernel_from_brackets(bxi, bdiff, beta, kp: KernelParams):
    s0, s1, s2 = kp.floats
    return bxi**s0 * bdiff ** (-s1) * beta ** (-s2)


def _points(x, d: int) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if d == 1 and (x.ndim == 0 or x.shape[-1] != 1):
        x = x[..., None]
    return x


def kernel_f(xi, eta, kp: KernelParams):
    """``<xi>^{s0} <xi - eta>^{-s1} <eta>^{-s2}`` at (broadcast) points."""
    xi, eta = _points(xi, kp.d), _points(eta, kp.d)
    out = _kernel_from_brackets(bracket(xi), bracket(xi - eta), bracket(eta), kp)
    return float(out) if np.ndim(out) == 0 else out


def omega_masks(bxi, beta, bdiff, rxi, op: OmegaParams) -> dict[int, np.ndarray]:
    """Literal membership of ``(xi, eta)`` in each region, from precomputed brackets.

    ``rxi`` is ``|xi|``. Arrays broadcast against each other.
    """
    dl = op.delta * bxi
    m1 = beta < dl
    m2 = bdiff < dl
    if op.modified_omega2:
        m2 = m2 & ~m1
    inner = rxi <= op.r_rad
    m3 = (dl <= np.minimum(beta, bdiff)) & inner
    m4 = (dl <= bdiff) & (bdiff <= beta) & ~inner
    m5 = (dl <= beta) & (beta <= bdiff) & ~inner
    return {1: m1, 2: m2, 3: m3, 4: m4, 5: m5}


def exclusive_masks(masks: dict[int, np.ndarray]) -> dict[int, np.ndarray]:
    """Assign every point to the lowest-numbered region containing it."""
    taken = np.zeros(np.broadcast(*masks.values()).shape, dtype=bool)
    out = {}
    for j in REGIONS:
        m = np.broadcast_to(masks[j], taken.shape) & ~taken
        out[j] = m
        taken = taken | m
    return out


def omega_indicator(j: int, xi, eta, op: OmegaParams, d: Optional[int] = None) -> np.ndarray:
    """Membership of ``(xi, eta)`` in region ``j``, with the real difference ``xi - eta``."""
    if j not in REGIONS:
        raise ValueError(f"region index must be in 1..5, got {j!r}")
    xi = np.asarray(xi, dtype=float)
    d = d if d is not None else (1 if xi.ndim == 0 else xi.shape[-1])
    xi, eta = _points(xi, d), _points(eta, d)
    bxi, beta, bdiff = bracket(xi), bracket(eta), bracket(xi - eta)
    rxi = np.sqrt(np.sum(xi * xi, axis=-1))
    out = omega_masks(bxi, beta, bdiff, rxi, op)[j]
    return bool(out) if np.ndim(out) == 0 else out


@dataclass(frozen=True)
class BracketKernel:
    """The kernel ``F`` of :class:`KernelParams`, optionally cut to one region.

    With ``exclusive=True`` region ties are broken toward the lower index so that
    the five pieces sum to ``F`` at every lattice point.
    """

    kp: KernelParams
    region: Optional[int] = None
    op: OmegaParams = field(default_factory=OmegaParams)
    exclusive: bool = False

    def block(self, xi: np.ndarray, eta: np.ndarray, diff: np.ndarray) -> np.ndarray:
        bxi, beta, bdiff = bracket(xi), bracket(eta), bracket(diff)
        vals = _kernel_from_brackets(bxi, bdiff, beta, self.kp)
        if self.region is None:
            return vals
        rxi = np.sqrt(np.sum(xi * xi, axis=-1))
        masks = omega_masks(bxi, beta, bdiff, rxi, self.op)
        if self.exclusive:
            masks = exclusive_masks(masks)
        return np.where(masks[self.region], vals, 0.0)

    def __call__(self, xi, eta):
        xi, eta = _points(xi, self.kp.d), _points(eta, self.kp.d)
        return self.block(xi, eta, xi - eta)


KernelLike = Union[JointFunction, np.ndarray, BracketKernel, Callable, float]

# --- lattice evaluation of T_F -----------------------------------------------

_CHUNK = 1 << 22  # max pair evaluations per block


def _kernel_rows(kernel: KernelLike, grid: Grid, rows: np.ndarray) -> np.ndarray:
    """Kernel values ``K[i, j] = F(xi_i, eta_j)`` for the given rows (flat indices)."""
    idx = grid.indices()
    axis = grid.axis
    if isinstance(kernel, JointFunction):
        if not (kernel.first.compatible(grid) and kernel.second.compatible(grid)):
            raise ValueError("kernel samples live on a different lattice")
        return kernel.matrix()[rows]
    if isinstance(kernel, np.ndarray):
        return kernel.reshape(grid.size, grid.size)[rows]
    if np.isscalar(kernel):
        return np.full((len(rows), grid.size), kernel, dtype=complex)
    xi = axis[idx[rows]][:, None, :]
    eta = axis[idx][None, :, :]
    if isinstance(kernel, BracketKernel):
        diff_idx = grid.wrapped_difference(idx[rows][:, None, :], idx[None, :, :])
        return kernel.block(xi, eta, axis[diff_idx])
    return np.asarray(kernel(xi, eta))


def _diff_flat(grid: Grid, rows: np.ndarray) -> np.ndarray:
    idx = grid.indices()
    diff = grid.wrapped_difference(idx[rows][:, None, :], idx[None, :, :])
    return np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), grid.shape)


def _row_chunks(grid: Grid):
    step = max(1, _CHUNK // grid.size)
    for start in range(0, grid.size, step):
        yield np.arange(start, min(start + step, grid.size))


def t_f_apply(kernel: KernelLike, f: GridFunction, g: GridFunction) -> GridFunction:
    """``T_F(f, g)(xi) = h^d sum_eta F(xi, eta) f(eta) g(xi - eta)``."""
    _same_grid(f, g)
    grid = f.grid
    out = np.empty(grid.size, dtype=complex)
    fv, gv = f.flat, g.flat
    for rows in _row_chunks(grid):
        K = _kernel_rows(kernel, grid, rows)
        out[rows] = np.sum(K * fv[None, :] * gv[_diff_flat(grid, rows)], axis=1)
    return GridFunction(grid, out * grid.cell)


def t_theta_f_apply(kernel: KernelLike, f: GridFunction, g: GridFunction) -> GridFunction:
    """``T_{Theta F}(f, g)(xi) = h^d sum_eta F(xi, eta) f(xi - eta) g(eta)``."""
    return t_f_apply(kernel, g, f)


def sample_kernel(kernel: KernelLike, grid: Grid) -> JointFunction:
    vals = np.concatenate([_kernel_rows(kernel, grid, rows) for rows in _row_chunks(grid)])
    return JointFunction(grid, grid, vals)


def theta_transform(F: JointFunction) -> JointFunction:
    """``(Theta F)(xi, eta) = F(xi, xi - eta)`` on the periodic lattice."""
    if not F.first.compatible(F.second):
        raise ValueError("Theta needs identical lattices in both variables")
    grid = F.first
    M = F.matrix()
    out = np.empty_like(M)
    for rows in _row_chunks(grid):
        out[rows] = np.take_along_axis(M[rows], _diff_flat(grid, rows), axis=1)
    return JointFunction(grid, grid, out)


def pairing(a: GridFunction, b: GridFunction) -> complex:
    """Bilinear ``<a, b> = \\int a b`` (no conjugation)."""
    _same_grid(a, b)
    return complex(a.grid.cell * np.sum(a.values * b.values))


def duality_sides(F: JointFunction, f: GridFunction, g: GridFunction, h: GridFunction) -> tuple[complex, complex]:
    """``<T_F(f, g), h>`` and ``<T_{F0}(h, g_check), f>`` with ``F0(eta, xi) = F(xi, eta)``."""
    lhs = pairing(t_f_apply(F, f, g), h)
    rhs = pairing(t_f_apply(F.transpose(), h, g.reflect()), f)
    return lhs, rhs


def lattice_brackets(grid: Grid):
    """``<xi>``, ``<eta>``, ``<xi - eta>`` (periodic) and ``|xi|`` over all lattice pairs."""
    pts = grid.points()
    idx = grid.indices()
    diff = grid.axis[grid.wrapped_difference(idx[:, None, :], idx[None, :, :])]
    bxi = bracket(pts)[:, None]
    beta = bracket(pts)[None, :]
    rxi = np.sqrt(np.sum(pts * pts, axis=-1))[:, None]
    return bxi, beta, bracket(diff), rxi


def omega_coverage(grid: Grid, op: OmegaParams) -> dict[str, int]:
    """Count lattice pairs lying in no region and in more than one region."""
    masks = omega_masks(*lattice_brackets(grid), op)
    count = sum(np.broadcast_to(m, masks[3].shape).astype(int) for m in masks.values())
    return {
        "pairs": int(count.size),
        "uncovered": int(np.sum(count == 0)),
        "overlap": int(np.sum(count > 1)),
    }


def decomposition_terms(
    v1: GridFunction, v2: GridFunction, kp: KernelParams, op: OmegaParams
) -> tuple[GridFunction, list[GridFunction]]:
    """``<xi>^{s0} (v1 * v2)`` and the five pieces ``T_{Theta F_j}(u1, u2)``, ``u_j = <.>^{s_j} v_j``."""
    _same_grid(v1, v2)
    grid = v1.grid
    b = grid.bracket()
    s0, s1, s2 = kp.floats
    lhs = convolve(v1, v2).map(lambda x: x * b**s0)
    u1 = v1.map(lambda x: x * b**s1)
    u2 = v2.map(lambda x: x * b**s2)
    terms = [
        t_theta_f_apply(BracketKernel(kp, j, op, exclusive=True), u1, u2) for j in REGIONS
    ]
    return lhs, terms


# --- slice norms and envelopes -------------------------------------------------


def _free_is_eta(j: int) -> bool:
    return j in (1, 2)


def _quadratic_roots(a: float, b: float, c: float) -> list[float]:
    if abs(a) < 1e-300:
        return [-c / b] if b else []
    disc = b * b - 4 * a * c
    if disc < 0:
        return []
    r = math.sqrt(disc)
    return [(-b - r) / (2 * a), (-b + r) / (2 * a)]


def _breakpoints_1d(fixed: float, free_eta: bool, op: OmegaParams) -> list[float]:
    dl = op.delta
    pts = [0.0]
    if free_eta:
        a = fixed
        w = (dl * bracket(a)) ** 2 - 1
        if w > 0:
            w = math.sqrt(w)
            pts += [-w, w, a - w, a + w]
        pts += [a / 2, a]
    else:
        e = fixed
        w = (bracket(e) / dl) ** 2 - 1
        if w > 0:
            w = math.sqrt(w)
            pts += [-w, w]
        # delta <xi> = <xi - e>
        pts += _quadratic_roots(1 - dl * dl, -2 * e, e * e + 1 - dl * dl)
        pts += [2 * e, e, -op.r_rad, op.r_rad]
    return pts


def _slice_1d(j: int, kp: KernelParams, op: OmegaParams, fixed: float, p: Exponent) -> float:
    free_eta = _free_is_eta(j)
    extent = 2 * (abs(fixed) + bracket(fixed) / op.delta + op.r_rad) + 10
    pts = sorted({min(max(x, -extent), extent) for x in _breakpoints_1d(fixed, free_eta, op)} | {-extent, extent})

    def pair(u):
        return (fixed, u) if free_eta else (u, fixed)

    def member(u):
        xi, eta = pair(u)
        return omega_indicator(j, xi, eta, op, d=1)

    def integrand(u):
        xi, eta = pair(u)
        return kernel_f(xi, eta, kp)

    total = 0.0
    best = 0.0
    pf = None if p.is_inf else float(p.value)
    for lo, hi in zip(pts[:-1], pts[1:]):
        if hi - lo <= 0 or not member(0.5 * (lo + hi)):
            continue
        if pf is None:
            us = np.linspace(lo, hi, 513)
            xi, eta = (np.full_like(us, fixed), us) if free_eta else (us, np.full_like(us, fixed))
            best = max(best, float(np.max(kernel_f(xi, eta, kp))))
        else:
            val, _ = integrate.quad(lambda u: integrand(u) ** pf, lo, hi, limit=200, epsabs=0.0, epsrel=1e-10)
            total += val
    if pf is None:
        return best
    return total ** (1.0 / pf)


def _slice_lattice(j, kp, op, fixed, p: Exponent, points_per_axis: int) -> float:
    fixed = np.asarray(fixed, dtype=float).reshape(-1)
    d = kp.d
    extent = 2 * (np.linalg.norm(fixed) + bracket(fixed) / op.delta + op.r_rad) + 10
    n = points_per_axis + points_per_axis % 2
    grid = Grid(d, n, 2 * extent / n)
    free = grid.points()
    if _free_is_eta(j):
        xi, eta = np.broadcast_to(fixed, free.shape), free
    else:
        xi, eta = free, np.broadcast_to(fixed, free.shape)
    vals = np.where(omega_indicator(j, xi, eta, op, d=d), kernel_f(xi, eta, kp), 0.0)
    return float(_lp_reduce(vals, p, (0,), grid.cell))


def slice_norm(
    j: int,
    kp: KernelParams,
    op: OmegaParams,
    fixed,
    p: ExponentLike,
    points_per_axis: int = 256,
) -> float:
    """``L^p`` norm of ``chi_{Omega_j} F`` in the free variable, the other one fixed.

    For ``j = 1, 2`` the free variable is ``eta`` (``fixed`` is ``xi``); for
    ``j = 3, 4, 5`` it is ``xi``. In one dimension the integral is done by
    adaptive quadrature between the region boundaries; in higher dimension by a
    lattice sum with ``points_per_axis`` points per axis.
    """
    if j not in REGIONS:
        raise ValueError(f"region index must be in 1..5, got {j!r}")
    p = _exponent(p)
    if kp.d == 1:
        return _slice_1d(j, kp, op, float(np.asarray(fixed, dtype=float).reshape(-1)[0]), p)
    return _slice_lattice(j, kp, op, fixed, p, points_per_axis)


def _d_over_p(kp: KernelParams, p: Exponent) -> Fraction:
    return kp.d * p.recip


def envelope_case(j: int, kp: KernelParams, p: ExponentLike) -> str:
    p = _exponent(p)
    dp = _d_over_p(kp, p)
    if j == 1:
        return "log" if kp.s2 == dp else "power"
    if j == 2:
        return "log" if kp.s1 == dp else "power"
    if j == 3:
        return "power"
    if j in (4, 5):
        if kp.s0 > -dp:
            return "above"
        return "log" if kp.s0 == -dp else "below"
    raise ValueError(f"region index must be in 1..5, got {j!r}")


def envelope(j: int, kp: KernelParams, p: ExponentLike, b: float) -> float:
    """Right-hand side of the slice-norm bound at ``<fixed variable> = b``."""
    p = _exponent(p)
    if b < 1:
        raise ValueError(f"bracket values are >= 1, got {b}")
    s0, s1, s2 = kp.floats
    dp = float(_d_over_p(kp, p))
    inv_p = float(p.recip)
    case = envelope_case(j, kp, p)
    logf = (1 + math.log(b)) ** inv_p
    if j in (1, 2):
        own, other = (s1, s2) if j == 1 else (s2, s1)
        if case == "log":
            return b ** (s0 - own) * logf
        return b ** (s0 - own) * (1 + b ** (-other + dp))
    if j == 3:
        return b ** (-s1 - s2)
    if case == "above":
        return b ** (s0 - s1 - s2 + dp)
    if case == "log":
        return b ** (-s1 - s2) * logf
    return b ** (-s1 - s2)


def predicted_exponent(j: int, kp: KernelParams, p: ExponentLike) -> float:
    """Polynomial growth exponent of :func:`envelope` (log factors dropped)."""
    p = _exponent(p)
    s0, s1, s2 = kp.floats
    dp = float(_d_over_p(kp, p))
    case = envelope_case(j, kp, p)
    if j in (1, 2):
        own, other = (s1, s2) if j == 1 else (s2, s1)
        extra = 0.0 if case == "log" else max(0.0, -other + dp)
        return s0 - own + extra
    if j == 3:
        return -s1 - s2
    if case == "above":
        return s0 - s1 - s2 + dp
    return -s1 - s2


def fixed_point_for_bracket(b: float, d: int) -> np.ndarray:
    """A point on the first axis with ``<x> = b``."""
    x = np.zeros(d)
    x[0] = math.sqrt(max(b * b - 1, 0.0))
    return x


def fit_growth_exponent(
    j: int,
    kp: KernelParams,
    op: OmegaParams,
    p: ExponentLike,
    levels: Sequence[int] = range(4, 11),
) -> float:
    """Least-squares slope of ``log slice_norm`` against ``log <.>`` at ``<.> = 2^k``."""
    levels = sorted(set(levels))
    if len(levels) < 4:
        raise ValueError("need at least four dyadic levels")
    logs, vals = [], []
    for k in levels:
        b = 2.0**k
        v = slice_norm(j, kp, op, fixed_point_for_bracket(b, kp.d), p)
        if not v > 0:
            raise ValueError(f"slice norm vanishes at level {k}; range is degenerate")
        logs.append(math.log(b))
        vals.append(math.log(v))
    slope, _ = np.polyfit(logs, vals, 1)
    return float(slope)


@dataclass
class EnvelopeStudy:
    j: int
    p: str
    kp: KernelParams
    case: str
    fitted_slope: float
    predicted_slope: float
    constant: float
    constant_drift: float
    ratios: list[float]


def envelope_study(
    j: int,
    kp: KernelParams,
    op: OmegaParams,
    p: ExponentLike,
    fit_levels: Sequence[int] = range(4, 11),
    top_level: int = 10,
    reference_level: int = 7,
) -> EnvelopeStudy:
    """Slope fit plus the domination constant ``C = max slice/envelope`` over ``<.> in [1, 2^top]``.

    ``constant_drift`` compares ``C`` on ``[1, 2^top]`` with ``C`` on
    ``[1, 2^reference]``; a wrong envelope exponent would keep pushing it up.
    """
    p = _exponent(p)
    ratios = []
    for k in range(top_level + 1):
        b = 2.0**k
        v = slice_norm(j, kp, op, fixed_point_for_bracket(b, kp.d), p)
        ratios.append(v / envelope(j, kp, p, b))
    c_full = max(ratios)
    c_ref = max(ratios[: reference_level + 1])
    drift = c_full / c_ref - 1 if c_ref > 0 else math.inf
    return EnvelopeStudy(
        j=j,
        p=str(p),
        kp=kp,
        case=envelope_case(j, kp, p),
        fitted_slope=fit_growth_exponent(j, kp, op, p, fit_levels),
        predicted_slope=predicted_exponent(j, kp, p),
        constant=c_full,
        constant_drift=drift,
        ratios=ratios,
    )


# --- ensembles and empirical ratio suprema -------------------------------------

FAMILIES = ("gaussian", "bandlimited", "power")
MODES = ("convolution", "fl-product", "t_f")


@dataclass(frozen=True)
class EnsembleConfig:
    seed: int
    family: str
    count: int
    d: int
    n: int
    h: float
    dyadic_levels: tuple[int, ...]
    exponent: float = 0.5  # decay of the power family

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; expected one of {FAMILIES}")
        if self.count < 1:
            raise ValueError("ensemble is empty")
        if not self.dyadic_levels:
            raise ValueError("no dyadic levels given")
        object.__setattr__(self, "dyadic_levels", tuple(int(k) for k in self.dyadic_levels))
        Grid(self.d, self.n, self.h)  # validates

    @property
    def base_grid(self) -> Grid:
        return Grid(self.d, self.n, self.h)


def member_rng(seed: int, member: int, stream: int = 0) -> np.random.Generator:
    """Counter-based generator for one ensemble member, independent of evaluation order."""
    ss = np.random.SeedSequence(seed, spawn_key=(member, stream))
    return np.random.Generator(np.random.Philox(ss))


@dataclass(frozen=True)
class WavePacket:
    amplitude: complex
    centre: np.ndarray
    width: float
    frequency: np.ndarray

    def __call__(self, *coords):
        r2 = sum((x - c) ** 2 for x, c in zip(coords, self.centre))
        phase = sum(w * x for x, w in zip(coords, self.frequency))
        return self.amplitude * np.exp(-r2 / (2 * self.width**2) + 1j * phase)


def random_packets(rng: np.random.Generator, base: Grid, count: int) -> list[WavePacket]:
    """Packets that decay below 1e-12 at the boundary and are resolved on ``base``."""
    half = base.half_width
    out = []
    for _ in range(count):
        width = rng.uniform(0.05, 0.1) * half
        centre = rng.uniform(-0.25 * half, 0.25 * half, size=base.d)
        band = max(0.0, 0.5 * math.pi / base.h - 8.0 / width)
        freq = rng.uniform(-band, band, size=base.d)
        amp = complex(rng.normal(), rng.normal())
        out.append(WavePacket(amp, centre, width, freq))
    return out


def _packet_function(packets: list[WavePacket], grid: Grid) -> GridFunction:
    return sample(lambda *c: sum(pk(*c) for pk in packets), grid)


def power_spectrum(grid: Grid, cutoff: float, a: float) -> GridFunction:
    """``chi_{<xi> <= cutoff} <xi>^{-a}`` sampled on ``grid``."""
    b = grid.bracket()
    return GridFunction(grid, np.where(b <= cutoff, b ** (-a), 0.0))


@dataclass
class RatioReport:
    mode: str
    family: str
    rows: list[tuple[float, int, float]]  # (resolution, member, ratio)
    maxima: list[float]
    resolutions: list[float]
    divergent: bool
    stability: float  # max/min of per-resolution maxima

    def summary(self) -> dict:
        return {
            "mode": self.mode,
            "family": self.family,
            "resolutions": self.resolutions,
            "maxima": self.maxima,
            "overall_max": max(self.maxima),
            "divergent": self.divergent,
            "stability": self.stability,
        }


def detect_divergence(seq: Sequence[float], min_levels: int = 4, factor: float = 2.0) -> bool:
    """Monotone growth over at least ``min_levels`` values with last/first >= ``factor``."""
    if len(seq) < min_levels:
        return False
    growing = all(b > a for a, b in zip(seq[:-1], seq[1:]))
    return growing and seq[-1] >= factor * seq[0]


def kernel_l_inf_r(kernel: KernelLike, grid: Grid, r: Exponent) -> float:
    """``||F||_{L^{inf, r}_2} = sup_xi ||F(xi, .)||_{L^r}`` over the lattice."""
    best = 0.0
    for rows in _row_chunks(grid):
        K = np.abs(_kernel_rows(kernel, grid, rows))
        best = max(best, float(np.max(_lp_reduce(K, r, (1,), grid.cell))))
    return best


def _ratio(mode, q: ExponentTriple, s, f1: GridFunction, f2: GridFunction, kernel=None, target=None) -> float:
    s0, s1, s2 = (parse_rational(x) for x in s)
    if mode == "convolution":
        num = lq_weighted(convolve(f1, f2), dual(q.q0), -s0)
        den = lq_weighted(f1, q.q1, s1) * lq_weighted(f2, q.q2, s2)
    elif mode == "fl-product":
        num = lq_weighted(dft(pointwise_product(f1, f2)), dual(q.q0), -s0)
        den = lq_weighted(dft(f1), q.q1, s1) * lq_weighted(dft(f2), q.q2, s2)
    elif mode == "t_f":
        r_val = r_functional(q)
        r_exp = Exponent(r_val) if 0 <= r_val <= 1 else None
        if r_exp is None:
            raise ValueError(f"R(q) = {r_val} outside [0, 1]; no kernel class")
        num = lq_weighted(t_f_apply(kernel, f1, f2), target)
        den = kernel_l_inf_r(kernel, f1.grid, r_exp) * lq_weighted(f1, q.q1) * lq_weighted(f2, q.q2)
    else:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    return num / den


def _members(cfg: EnsembleConfig, grid: Grid, level: int):
    """Yield ``(member, f1, f2)`` on ``grid`` for one dyadic level."""
    if cfg.family == "power":
        f_hat = power_spectrum(grid.dual(), 2.0**level, cfg.exponent)
        yield 0, f_hat, f_hat
        return
    base = cfg.base_grid
    k = 1 if cfg.family == "gaussian" else 4
    for m in range(cfg.count):
        rng = member_rng(cfg.seed, m)
        f1 = _packet_function(random_packets(rng, base, k), grid)
        f2 = _packet_function(random_packets(rng, base, k), grid)
        yield m, f1, f2


def estimate_ratio_sup(
    mode: str,
    q: ExponentTriple,
    s,
    d: int,
    cfg: EnsembleConfig,
    kernel: Optional[KernelLike] = None,
    target: Optional[ExponentLike] = None,
) -> RatioReport:
    """Empirical ``sup`` of output norm over product of input norms, per resolution.

    For the smooth families each dyadic level ``k`` refines the base grid by
    ``2^k`` (same extent). For the ``power`` family the grid is fixed and level
    ``k`` truncates the spectrum at ``<xi> <= 2^k``; in ``fl-product`` mode the
    inputs are the inverse transforms of those spectra, in ``convolution`` mode
    the truncated powers themselves.
    """
    if mode not in MODES:
        raise ValueError(f"unknown mode {mode!r}; expected one of {MODES}")
    if d != cfg.d:
        raise ValueError(f"dimension {d} disagrees with ensemble dimension {cfg.d}")
    if cfg.count < 1:
        raise ValueError("ensemble is empty")
    s = tuple(parse_rational(x) for x in s)
    if mode == "t_f" and kernel is None:
        kernel = BracketKernel(KernelParams(*s, d=d))
    target = _exponent(target) if target is not None else dual(q.q0)
    rows, maxima, resolutions = [], [], []
    for level in cfg.dyadic_levels:
        if cfg.family == "power":
            grid = cfg.base_grid
            resolution = 2.0**level
        else:
            grid = cfg.base_grid.refine(2**level) if level > 0 else cfg.base_grid
            resolution = float(grid.n)
        best = 0.0
        for m, f1, f2 in _members(cfg, grid, level):
            if cfg.family == "power":
                if mode == "fl-product":
                    f1 = f2 = idft(f1)
                else:
                    f1 = f2 = GridFunction(grid, f1.values)
            ratio = _ratio(mode, q, s, f1, f2, kernel, target)
            rows.append((resolution, m, ratio))
            best = max(best, ratio)
        maxima.append(best)
        resolutions.append(resolution)
    stability = max(maxima) / min(maxima) if min(maxima) > 0 else math.inf
    return RatioReport(mode, cfg.family, rows, maxima, resolutions, detect_divergence(maxima), stability)
