"""Cone-localized Fourier-Lebesgue seminorms and a discrete wavefront-set proxy.

All functions here take *spectra* (samples of ``f^`` on a frequency lattice)
unless the name says otherwise; :func:`inclusion_check` accepts space-domain
samples and transforms them itself.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .admissibility import HypothesisError, Verdict, WeightTriple, check_microlocal
from .bilinear import OmegaParams, _row_chunks, omega_masks
from .exponents import ExponentLike, ExponentTriple, dual, parse_rational
from .grid import Grid, GridFunction, _same_grid, bracket, dft, idft, pointwise_product
from .norms import _exponent, _lp_reduce, lq_weighted

SINGULAR_RATE = 0.95


@dataclass(frozen=True)
class Cone:
    """Closed cone ``{xi != 0 : <xi/|xi|, direction> >= cos(half_angle)}``."""

    direction: tuple[float, ...]
    half_angle: float

    def __post_init__(self):
        v = np.asarray(self.direction, dtype=float).reshape(-1)
        norm = float(np.linalg.norm(v))
        if norm == 0:
            raise ValueError("cone direction must be nonzero")
        if not 0 < self.half_angle <= math.pi / 2:
            raise ValueError(f"half-angle {self.half_angle} outside (0, pi/2]")
        object.__setattr__(self, "direction", tuple(float(c) for c in v / norm))

    @property
    def d(self) -> int:
        return len(self.direction)

    def contains(self, points: np.ndarray) -> np.ndarray:
        """Membership of points with coordinates on the last axis."""
        pts = np.asarray(points, dtype=float)
        if self.d == 1 and (pts.ndim == 0 or pts.shape[-1] != 1):
            pts = pts[..., None]
        r = np.sqrt(np.sum(pts * pts, axis=-1))
        dots = pts @ np.asarray(self.direction)
        with np.errstate(invalid="ignore", divide="ignore"):
            cosines = np.where(r > 0, dots / np.where(r > 0, r, 1.0), -2.0)
        return (r > 0) & (cosines >= math.cos(self.half_angle) - 1e-12)

    def mask(self, grid: Grid) -> np.ndarray:
        return self.contains(grid.points()).reshape(grid.shape)

    def widened(self, factor: float = 2.0) -> "Cone":
        return Cone(self.direction, min(self.half_angle * factor, math.pi / 2))

    def angle_to(self, other: "Cone") -> float:
        c = float(np.clip(np.dot(self.direction, other.direction), -1.0, 1.0))
        return math.acos(c)


@dataclass(frozen=True)
class ConeMesh:
    cones: tuple[Cone, ...]

    def __post_init__(self):
        if not self.cones:
            raise ValueError("cone mesh is empty")
        if len({c.d for c in self.cones}) != 1:
            raise ValueError("cones of different dimensions")

    @property
    def d(self) -> int:
        return self.cones[0].d

    def __len__(self) -> int:
        return len(self.cones)

    def __iter__(self):
        return iter(self.cones)

    def opposite(self, index: int) -> int:
        """Index of the cone whose direction is ``-direction`` of cone ``index``."""
        target = -np.asarray(self.cones[index].direction)
        for k, c in enumerate(self.cones):
            if np.allclose(c.direction, target, atol=1e-9):
                return k
        raise ValueError(f"mesh has no cone opposite to {index}")

    def adjacent(self, i: int, j: int) -> bool:
        """Within one mesh step (never true across the origin in one dimension)."""
        if i == j:
            return True
        if self.d == 1:
            return False
        a, b = self.cones[i], self.cones[j]
        return a.angle_to(b) <= a.half_angle + b.half_angle + 1e-9


def cone_mesh(d: int, count: int = 16) -> ConeMesh:
    """Two half-lines in one dimension; ``count`` equiangular sectors in two."""
    if d == 1:
        return ConeMesh((Cone((1.0,), math.pi / 4), Cone((-1.0,), math.pi / 4)))
    if d == 2:
        half = math.pi / count
        cones = tuple(
            Cone((math.cos(2 * math.pi * k / count), math.sin(2 * math.pi * k / count)), half)
            for k in range(count)
        )
        return ConeMesh(cones)
    raise ValueError("cone meshes are provided for d = 1, 2 only")


def cone_fl_seminorm(f_hat: GridFunction, cone: Cone, q: ExponentLike, s=0) -> float:
    """``|| chi_cone f^ <.>^s ||_{L^q}`` for a spectrum ``f^``."""
    masked = GridFunction(f_hat.grid, np.where(cone.mask(f_hat.grid), f_hat.values, 0))
    return lq_weighted(masked, q, s)


def annulus_norms(f_hat: GridFunction, cone: Cone, q: ExponentLike, s, levels: Sequence[int]) -> list[float]:
    """Cone seminorm restricted to ``2^k <= <xi> < 2^{k+1}`` for each ``k``."""
    q = _exponent(q)
    grid = f_hat.grid
    b = grid.bracket()
    weighted = np.abs(f_hat.values) * b ** float(parse_rational(s))
    inside = cone.mask(grid)
    out = []
    for k in levels:
        ring = inside & (b >= 2.0**k) & (b < 2.0 ** (k + 1))
        out.append(float(_lp_reduce(np.where(ring, weighted, 0.0), q, tuple(range(grid.d)), grid.cell)))
    return out


def complete_levels(grid: Grid, kmin: int = 2, kmax: Optional[int] = None) -> list[int]:
    """Dyadic annuli lying entirely inside the lattice box."""
    top = int(math.floor(math.log2(grid.half_width))) - 1
    if kmax is not None:
        top = min(top, kmax)
    levels = list(range(kmin, top + 1))
    if len(levels) < 4:
        raise ValueError(f"lattice only resolves annuli {levels}; need at least four")
    return levels


def decay_rate(tail: Sequence[float], floor: float) -> float:
    """Geometric mean of the last three consecutive annulus ratios (0 once below ``floor``)."""
    last = list(tail[-4:])
    if last[-1] <= floor:
        return 0.0
    ratios = [b / a if a > 0 else math.inf for a, b in zip(last[:-1], last[1:])]
    return float(np.prod(ratios) ** (1 / 3))


@dataclass
class ProxyResult:
    levels: list[int]
    tails: list[list[float]]
    rates: list[float]
    singular: frozenset[int]

    def to_dict(self) -> dict:
        return {
            "levels": self.levels,
            "tails": self.tails,
            "rates": self.rates,
            "singular": sorted(self.singular),
        }


def wavefront_proxy(
    f_hat: GridFunction,
    q: ExponentLike,
    s,
    mesh: ConeMesh,
    kmin: int = 2,
    kmax: Optional[int] = None,
    rate: float = SINGULAR_RATE,
) -> ProxyResult:
    """Cones whose annulus tail of ``|| chi f^ <.>^s ||_{L^q}`` does not decay.

    Annuli whose largest spectral sample is below ``1e-9`` of the global maximum
    count as zero; this keeps FFT round-off from masquerading as a slow tail.
    """
    if not isinstance(mesh, ConeMesh) or len(mesh) == 0:
        raise ValueError("cone mesh is empty")
    levels = complete_levels(f_hat.grid, kmin, kmax)
    peak = float(np.max(np.abs(f_hat.values)))
    b = f_hat.grid.bracket()
    tails, rates, singular = [], [], set()
    for idx, cone in enumerate(mesh):
        tail = annulus_norms(f_hat, cone, q, s, levels)
        inside = cone.mask(f_hat.grid)
        ring = inside & (b >= 2.0 ** levels[-1]) & (b < 2.0 ** (levels[-1] + 1))
        last_peak = float(np.max(np.abs(f_hat.values[ring]), initial=0.0))
        r = 0.0 if last_peak <= 1e-9 * peak else decay_rate(tail, 0.0)
        tails.append(tail)
        rates.append(r)
        if r >= rate:
            singular.add(idx)
    return ProxyResult(levels, tails, rates, frozenset(singular))


# --- J_k integrals ---------------------------------------------------------------


def _j_masks(k: int, bxi, beta, bdiff, rxi, op: OmegaParams):
    if k not in (0, 1, 2):
        raise ValueError(f"J index must be 0, 1 or 2, got {k!r}")
    masks = omega_masks(bxi, beta, bdiff, rxi, op)
    if k == 1:
        return masks[1]
    if k == 2:
        return masks[2]
    return ~(masks[1] | masks[2])


def j_integrals(
    k: int,
    f1_hat: GridFunction,
    f2_hat: GridFunction,
    s,
    op: OmegaParams,
    rows: Optional[np.ndarray] = None,
) -> np.ndarray:
    """``<xi>^s h^d sum_{eta: (xi, eta) in Omega_k} |f1^(xi - eta) f2^(eta)|`` for flat ``rows``.

    Differences are periodic, so ``J_0 + J_1 + J_2`` is exactly the weighted
    circular convolution of ``|f1^|`` and ``|f2^|``.
    """
    _same_grid(f1_hat, f2_hat)
    grid = f1_hat.grid
    rows = np.arange(grid.size) if rows is None else np.asarray(rows)
    s = float(parse_rational(s))
    idx = grid.indices()
    pts = grid.points()
    a1, a2 = np.abs(f1_hat.flat), np.abs(f2_hat.flat)
    beta_all = bracket(pts)
    out = np.empty(len(rows))
    step = max(1, (1 << 22) // grid.size)
    for start in range(0, len(rows), step):
        chunk = rows[start:start + step]
        xi = pts[chunk]
        bxi = bracket(xi)[:, None]
        # Omega_1 only reaches <eta> < delta <xi>
        cand = np.nonzero(beta_all < op.delta * bxi.max())[0] if k == 1 else np.arange(grid.size)
        diff = grid.wrapped_difference(idx[chunk][:, None, :], idx[cand][None, :, :])
        diff_flat = np.ravel_multi_index(tuple(np.moveaxis(diff, -1, 0)), grid.shape)
        rxi = np.sqrt(np.sum(xi * xi, axis=-1))[:, None]
        mask = _j_masks(k, bxi, beta_all[cand][None, :], bracket(grid.axis[diff]), rxi, op)
        vals = np.where(mask, a1[diff_flat] * a2[cand][None, :], 0.0)
        out[start:start + step] = grid.cell * bxi[:, 0] ** s * np.sum(vals, axis=1)
    return out


def j_integral(k: int, f1_hat: GridFunction, f2_hat: GridFunction, s, op: OmegaParams, xi_index) -> float:
    """:func:`j_integrals` at one lattice point given by its multi-index."""
    grid = f1_hat.grid
    flat = int(np.ravel_multi_index(tuple(np.atleast_1d(xi_index)), grid.shape))
    return float(j_integrals(k, f1_hat, f2_hat, s, op, np.array([flat]))[0])


def omega1_comparability(grid: Grid, op: OmegaParams) -> dict[str, float]:
    """Largest ``<xi-eta>/<xi>`` and ``<xi>/<xi-eta>`` over lattice pairs in ``Omega_1``.

    Uses the true difference ``xi - eta``. The bound ``C(delta)`` follows from
    ``|eta| < delta <xi>`` and the triangle inequality for ``(1, x)``.
    """
    pts = grid.points()
    bx = bracket(pts)
    worst_up, worst_down, count = 1.0, 1.0, 0
    for rows in _row_chunks(grid):
        xi = pts[rows][:, None, :]
        diff = bracket(xi - pts[None, :, :])
        m1 = bx[None, :] < op.delta * bx[rows][:, None]
        if not np.any(m1):
            continue
        count += int(np.sum(m1))
        ratio = diff / bx[rows][:, None]
        worst_up = max(worst_up, float(np.max(ratio[m1])))
        worst_down = max(worst_down, float(np.max(1 / ratio[m1])))
    bound = max(1 + op.delta, 1 / (1 - op.delta))
    return {"pairs": count, "max_up": worst_up, "max_down": worst_down, "bound": bound}


# --- inclusion -------------------------------------------------------------------


class InadmissibleError(HypothesisError):
    """Raised with the failing :class:`Verdict` attached."""

    def __init__(self, verdict: Verdict):
        super().__init__(f"configuration inadmissible: clause {verdict.clause} fails")
        self.verdict = verdict


@dataclass
class InclusionReport:
    mesh_size: int
    product: ProxyResult
    first: ProxyResult
    second: ProxyResult
    contained: bool
    artifacts: list[int]
    failures: list[int]
    j1_bounds: list[dict]
    j1_constant: float
    verdict: Verdict
    params: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": "1",
            "params": self.params,
            "verdict": self.verdict.to_dict(),
            "mesh_size": self.mesh_size,
            "product": self.product.to_dict(),
            "f1": self.first.to_dict(),
            "f2": self.second.to_dict(),
            "union": sorted(self.first.singular | self.second.singular),
            "contained": self.contained,
            "boundary_artifacts": self.artifacts,
            "failures": self.failures,
            "j1_bounds": self.j1_bounds,
            "j1_constant": self.j1_constant,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)


def _subsample_rows(grid: Grid, budget: int) -> tuple[np.ndarray, int]:
    stride = 1
    while (grid.n // stride) ** grid.d > budget:
        stride *= 2
    sub = np.indices((grid.n // stride,) * grid.d).reshape(grid.d, -1).T * stride
    return np.ravel_multi_index(tuple(sub.T), grid.shape), stride


def j1_bounds(
    f1_hat: GridFunction,
    f2_hat: GridFunction,
    q: ExponentTriple,
    s: WeightTriple,
    mesh: ConeMesh,
    op: OmegaParams,
    budget: int = 1024,
) -> list[dict]:
    """Per cone ``Gamma_1``: ``||J_1||_{L^{q0'}(Gamma_1)}`` against ``|f1|_{FL^{q1, Gamma}_{s1}} |f2|_{FL^{q2}_{s2}}``.

    ``Gamma`` is ``Gamma_1`` with doubled aperture, the target weight is ``-s0``,
    and ``xi`` is subsampled to at most ``budget`` lattice points outside the
    ball ``|xi| < r_rad``, where directions are not yet resolved.
    """
    grid = f1_hat.grid
    rows, stride = _subsample_rows(grid, budget)
    pts = grid.points()[rows]
    outer = np.sqrt(np.sum(pts * pts, axis=-1)) >= op.r_rad
    rows, pts = rows[outer], pts[outer]
    j1 = j_integrals(1, f1_hat, f2_hat, -s.s0, op, rows)
    target = dual(q.q0)
    full2 = lq_weighted(f2_hat, q.q2, s.s2)
    out = []
    for idx, cone in enumerate(mesh):
        inside = cone.contains(pts)
        lhs = float(_lp_reduce(np.where(inside, j1, 0.0), target, (0,), grid.cell * stride**grid.d))
        rhs = cone_fl_seminorm(f1_hat, cone.widened(), q.q1, s.s1) * full2
        ratio = lhs / rhs if rhs > 0 else (0.0 if lhs == 0 else math.inf)
        out.append({"cone": idx, "lhs": lhs, "rhs": rhs, "ratio": ratio})
    return out


def cone_adapted_params(mesh: ConeMesh) -> OmegaParams:
    """``delta`` small enough that ``xi`` in a mesh cone and ``|eta| < delta <xi>`` keep
    ``xi - eta`` inside the doubled cone once ``|xi| >= r_rad = 4/delta``."""
    if mesh.d == 1:
        return OmegaParams()
    delta = 0.9 * math.sin(min(c.half_angle for c in mesh))
    return OmegaParams(delta=delta, r_rad=4 / delta)


def inclusion_check(
    f1: GridFunction,
    f2: GridFunction,
    q: ExponentTriple,
    s: WeightTriple,
    mesh: ConeMesh,
    op: Optional[OmegaParams] = None,
    kmin: int = 2,
    kmax: Optional[int] = None,
    j_budget: int = 1024,
) -> InclusionReport:
    """Compare the product's proxy set (in ``FL^{q0'}_{-s0}``) with the union of the factors'."""
    verdict = check_microlocal(q, s)
    if not verdict.admissible:
        raise InadmissibleError(verdict)
    _same_grid(f1, f2)
    op = op or cone_adapted_params(mesh)
    h1, h2 = dft(f1), dft(f2)
    hp = dft(pointwise_product(f1, f2))
    p1 = wavefront_proxy(h1, q.q1, s.s1, mesh, kmin, kmax)
    p2 = wavefront_proxy(h2, q.q2, s.s2, mesh, kmin, kmax)
    pp = wavefront_proxy(hp, dual(q.q0), -s.s0, mesh, kmin, kmax)
    union = p1.singular | p2.singular
    artifacts, failures = [], []
    for c in sorted(pp.singular - union):
        if any(mesh.adjacent(c, u) for u in union):
            artifacts.append(c)
        else:
            failures.append(c)
    bounds = j1_bounds(h1, h2, q, s, mesh, op, j_budget)
    finite = [b["ratio"] for b in bounds if math.isfinite(b["ratio"])]
    return InclusionReport(
        mesh_size=len(mesh),
        product=pp,
        first=p1,
        second=p2,
        contained=pp.singular <= union,
        artifacts=artifacts,
        failures=failures,
        j1_bounds=bounds,
        j1_constant=max(finite) if len(finite) == len(bounds) else math.inf,
        verdict=verdict,
        params={"q": [str(e) for e in q], "s": [str(x) for x in s], "d": s.d},
    )


# --- synthetic presets -----------------------------------------------------------


@dataclass(frozen=True)
class WavefrontPreset:
    name: str
    f1: GridFunction
    f2: GridFunction
    q: ExponentTriple
    s: WeightTriple
    kmax: Optional[int] = None


def _preset_grid(d: int) -> Grid:
    if d == 1:
        return Grid(1, 4096, math.pi / 1024)
    if d == 2:
        return Grid(2, 512, math.pi / 256)
    raise ValueError("wavefront presets exist for d = 1, 2 only")


def _gaussian(grid: Grid, centre: float = 0.0, width: float = 0.5) -> GridFunction:
    r2 = sum((m - centre) ** 2 for m in grid.mesh())
    return GridFunction(grid, np.exp(-r2 / (2 * width**2)))


def _cone_power(grid: Grid, direction: Sequence[float], a: float, cutoff: float) -> GridFunction:
    """Space samples whose spectrum is ``<xi>^{-a}`` on a thin cone, cut at ``|xi| <= cutoff``."""
    dual_grid = grid.dual()
    half = math.pi / 4 if grid.d == 1 else math.pi / 32
    cone = Cone(tuple(direction), half)
    radius = np.sqrt(sum(m * m for m in dual_grid.mesh()))
    spectrum = np.where(cone.mask(dual_grid) & (radius <= cutoff), dual_grid.bracket() ** (-a), 0.0)
    return idft(GridFunction(dual_grid, spectrum))


def wavefront_presets(d: int) -> list[WavefrontPreset]:
    """Smooth pair, one singular factor, and factors singular in disjoint directions.

    All use ``q = (2, 2, 2)``, ``s = (0, 1, 1)``; the singular spectra decay like
    ``<xi>^{-a}`` with ``a`` just below the ``FL^2_1`` threshold ``1 + d/2``.
    """
    grid = _preset_grid(d)
    q = ExponentTriple.of(2, 2, 2)
    s = WeightTriple(0, 1, 1, d=d)
    a = 1.4 if d == 1 else 1.8
    cutoff = 0.6 * grid.dual().half_width if d == 1 else 200.0
    kmax = 8 if d == 1 else 6
    e1 = (1.0,) if d == 1 else (1.0, 0.0)
    e2 = (-1.0,) if d == 1 else (0.0, 1.0)
    width = 0.5 if d == 1 else 0.3
    smooth = _gaussian(grid, 0.0, width)
    return [
        WavefrontPreset("smooth", smooth, _gaussian(grid, 0.2, 1.2 * width), q, s, kmax),
        WavefrontPreset("one-singular", _cone_power(grid, e1, a, cutoff), smooth, q, s, kmax),
        WavefrontPreset("disjoint", _cone_power(grid, e1, a, cutoff), _cone_power(grid, e2, a, cutoff), q, s, kmax),
    ]
