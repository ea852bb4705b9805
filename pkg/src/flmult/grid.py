"""Uniform origin-centred lattices, sampled functions and their transforms.

Fourier convention: ``f^(xi) = (2 pi)^{-d/2} \\int f(x) exp(-i <x, xi>) dx``.
A grid with ``n`` points per axis and spacing ``h`` has coordinates
``h * (k - n/2)``; its dual lattice has spacing ``2 pi / (n h)`` and the same
indexing, so ``dft`` maps a function on one onto the other. Differences of
lattice points are taken modulo the period, which makes every convolution
below an exact circular one.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Union

import numpy as np

MAX_DIM = 3


def bracket(x) -> Union[float, np.ndarray]:
    """``<x> = (1 + |x|^2)^{1/2}``; ``x`` has its coordinates on the last axis.

    Scalars and 1-d arrays of scalars are read as points of the real line.
    """
    x = np.asarray(x, dtype=float)
    if x.ndim == 0:
        return float(math.sqrt(1.0 + float(x) ** 2))
    return np.sqrt(1.0 + np.sum(x * x, axis=-1))


@dataclass(frozen=True)
class Grid:
    d: int
    n: int
    h: float

    def __post_init__(self):
        if not 1 <= self.d <= MAX_DIM:
            raise ValueError(f"dimension {self.d} outside 1..{MAX_DIM}")
        if self.n < 2 or self.n % 2:
            raise ValueError(f"points per axis must be even and >= 2, got {self.n}")
        if not self.h > 0:
            raise ValueError(f"spacing must be positive, got {self.h}")
        object.__setattr__(self, "h", float(self.h))

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.d

    @property
    def size(self) -> int:
        return self.n**self.d

    @property
    def cell(self) -> float:
        """Quadrature weight ``h^d``."""
        return self.h**self.d

    @property
    def axis(self) -> np.ndarray:
        return self.h * (np.arange(self.n) - self.n // 2)

    @property
    def half_width(self) -> float:
        return self.h * self.n / 2

    def mesh(self) -> list[np.ndarray]:
        return np.meshgrid(*([self.axis] * self.d), indexing="ij")

    def points(self) -> np.ndarray:
        """Coordinates as an array of shape ``(n^d, d)``, row-major."""
        return np.stack([m.ravel() for m in self.mesh()], axis=-1)

    def indices(self) -> np.ndarray:
        """Integer multi-indices, shape ``(n^d, d)``, row-major."""
        idx = np.indices(self.shape).reshape(self.d, -1).T
        return idx

    def radius(self) -> np.ndarray:
        return np.sqrt(sum(m * m for m in self.mesh()))

    def bracket(self) -> np.ndarray:
        return np.sqrt(1.0 + sum(m * m for m in self.mesh()))

    def dual(self) -> "Grid":
        return Grid(self.d, self.n, 2 * math.pi / (self.n * self.h))

    def refine(self, factor: int = 2) -> "Grid":
        """Same physical extent, ``factor`` times finer."""
        return Grid(self.d, self.n * factor, self.h / factor)

    def compatible(self, other: "Grid") -> bool:
        return self.d == other.d and self.n == other.n and math.isclose(self.h, other.h, rel_tol=1e-12)

    def wrapped_difference(self, i: np.ndarray, j: np.ndarray) -> np.ndarray:
        """Lattice index of ``x_i - x_j`` modulo the period (componentwise)."""
        return (np.asarray(i) - np.asarray(j) + self.n // 2) % self.n

    def reflected_index(self, i: np.ndarray) -> np.ndarray:
        """Lattice index of ``-x_i`` modulo the period."""
        return (self.n - np.asarray(i)) % self.n


@dataclass(frozen=True, eq=False)
class GridFunction:
    """Complex samples on a :class:`Grid`, stored with shape ``(n,)*d``."""

    grid: Grid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=complex)
        if values.size != self.grid.size:
            raise ValueError(f"{values.size} samples for a grid of {self.grid.size} points")
        values = values.reshape(self.grid.shape)
        if not np.all(np.isfinite(values)):
            raise ValueError("grid function values must be finite")
        values.setflags(write=False)
        object.__setattr__(self, "values", values)

    @property
    def flat(self) -> np.ndarray:
        return self.values.ravel()

    def __add__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values + other.values)

    def __sub__(self, other: "GridFunction") -> "GridFunction":
        _same_grid(self, other)
        return GridFunction(self.grid, self.values - other.values)

    def scale(self, c: complex) -> "GridFunction":
        return GridFunction(self.grid, c * self.values)

    def map(self, fn: Callable[[np.ndarray], np.ndarray]) -> "GridFunction":
        return GridFunction(self.grid, fn(self.values))

    def reflect(self) -> "GridFunction":
        """``x -> f(-x)`` on the periodic lattice."""
        out = self.values
        for ax in range(self.grid.d):
            idx = self.grid.reflected_index(np.arange(self.grid.n))
            out = np.take(out, idx, axis=ax)
        return GridFunction(self.grid, out)

    def l2(self) -> float:
        return float(np.sqrt(self.grid.cell * np.sum(np.abs(self.values) ** 2)))

    def integral(self) -> complex:
        return complex(self.grid.cell * np.sum(self.values))


def _same_grid(f: GridFunction, g: GridFunction):
    if not f.grid.compatible(g.grid):
        raise ValueError(f"grid mismatch: {f.grid} vs {g.grid}")


def sample(expr: Callable, grid: Grid) -> GridFunction:
    """Evaluate ``expr(*coords)`` on the grid, one coordinate array per axis."""
    values = expr(*grid.mesh())
    return GridFunction(grid, np.broadcast_to(np.asarray(values, dtype=complex), grid.shape))


def constant(grid: Grid, c: complex = 1.0) -> GridFunction:
    return GridFunction(grid, np.full(grid.shape, c, dtype=complex))


def delta(grid: Grid, index=None) -> GridFunction:
    """Unit mass ``1/h^d`` at a lattice point (the origin by default)."""
    values = np.zeros(grid.shape, dtype=complex)
    index = (grid.n // 2,) * grid.d if index is None else tuple(index)
    values[index] = 1.0 / grid.cell
    return GridFunction(grid, values)


def _axes(d: int) -> tuple[int, ...]:
    return tuple(range(d))


def dft(f: GridFunction) -> GridFunction:
    """Unitary Fourier transform onto the dual lattice."""
    g = f.grid
    axes = _axes(g.d)
    raw = np.fft.fftshift(np.fft.fftn(np.fft.ifftshift(f.values, axes=axes), axes=axes), axes=axes)
    return GridFunction(g.dual(), raw * g.cell / (2 * math.pi) ** (g.d / 2))


def idft(fhat: GridFunction) -> GridFunction:
    """Inverse of :func:`dft`: maps samples on a dual lattice back to space."""
    g = fhat.grid
    axes = _axes(g.d)
    raw = np.fft.fftshift(np.fft.ifftn(np.fft.ifftshift(fhat.values, axes=axes), axes=axes), axes=axes)
    return GridFunction(g.dual(), raw * g.size * g.cell / (2 * math.pi) ** (g.d / 2))


def convolve(f: GridFunction, g: GridFunction) -> GridFunction:
    """``(f*g)(x) = h^d sum_y f(y) g(x - y)`` with periodic differences."""
    _same_grid(f, g)
    axes = _axes(f.grid.d)
    fa = np.fft.fftn(np.fft.ifftshift(f.values, axes=axes), axes=axes)
    ga = np.fft.fftn(np.fft.ifftshift(g.values, axes=axes), axes=axes)
    out = np.fft.fftshift(np.fft.ifftn(fa * ga, axes=axes), axes=axes)
    return GridFunction(f.grid, out * f.grid.cell)


def pointwise_product(f: GridFunction, g: GridFunction) -> GridFunction:
    _same_grid(f, g)
    return GridFunction(f.grid, f.values * g.values)


# --- serialization -----------------------------------------------------------

_MAGIC = b"FLMULT-GRIDFUNCTION-1\n"


def to_csv(f: GridFunction) -> str:
    """CSV text with a header comment carrying the grid, then ``index,re,im`` rows (row-major)."""
    buf = io.StringIO()
    buf.write(f"# d={f.grid.d} n={f.grid.n} h={f.grid.h!r}\n")
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["index", "re", "im"])
    for k, v in enumerate(f.flat):
        writer.writerow([k, repr(float(v.real)), repr(float(v.imag))])
    return buf.getvalue()


def from_csv(text: str) -> GridFunction:
    lines = text.splitlines()
    if not lines or not lines[0].startswith("#"):
        raise ValueError("missing grid header line")
    meta = dict(item.split("=") for item in lines[0][1:].split())
    grid = Grid(int(meta["d"]), int(meta["n"]), float(meta["h"]))
    reader = csv.DictReader(lines[1:])
    values = np.zeros(grid.size, dtype=complex)
    seen = 0
    for row in reader:
        values[int(row["index"])] = complex(float(row["re"]), float(row["im"]))
        seen += 1
    if seen != grid.size:
        raise ValueError(f"expected {grid.size} rows, found {seen}")
    return GridFunction(grid, values)


def to_bytes(f: GridFunction) -> bytes:
    """Magic line, one JSON header line, then little-endian complex128 samples (row-major)."""
    header = json.dumps({"d": f.grid.d, "n": f.grid.n, "h": f.grid.h}).encode() + b"\n"
    return _MAGIC + header + f.flat.astype("<c16").tobytes()


def from_bytes(data: bytes) -> GridFunction:
    if not data.startswith(_MAGIC):
        raise ValueError("not a serialized grid function")
    rest = data[len(_MAGIC):]
    header, _, payload = rest.partition(b"\n")
    meta = json.loads(header)
    grid = Grid(meta["d"], meta["n"], meta["h"])
    values = np.frombuffer(payload, dtype="<c16")
    return GridFunction(grid, values.copy())


def save(f: GridFunction, path: Union[str, Path]):
    path = Path(path)
    if path.suffix == ".csv":
        path.write_text(to_csv(f))
    else:
        path.write_bytes(to_bytes(f))


def load(path: Union[str, Path]) -> GridFunction:
    path = Path(path)
    if path.suffix == ".csv":
        return from_csv(path.read_text())
    return from_bytes(path.read_bytes())
