"""Periodic truncated domain, grid fields, probability vectors, duality, FFT oracle.

The spatial domain is the torus [-R, R)^d sampled at N points per axis
(x_i = -R + i*h, h = 2R/N). Probability vectors store cell masses (density
times h^d), which makes mass conservation an exact algebraic invariant of
zero-column-sum stencils.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

MAGIC = b"TCMFG1"
_HEADER = struct.Struct("<6sHIddI")  # magic, d, N, R, T, M -> 32 bytes
assert _HEADER.size == 32


@dataclass(frozen=True)
class GridSpec:
    """Discretization of (0,T) x [-R,R)^d."""

    d: int
    R: float
    N: int
    T: float
    M: int

    def __post_init__(self):
        if self.d not in (1, 2):
            raise ValueError(f"dimension must be 1 or 2, got {self.d}")
        if self.N < 2 or self.N & (self.N - 1) != 0:
            raise ValueError(f"N must be a power of two, got {self.N}")
        if self.R <= 0 or self.T <= 0 or self.M < 1:
            raise ValueError("R, T must be positive and M >= 1")
        if self.h >= 1:
            raise ValueError(f"grid spacing h={self.h} must be < 1")

    @property
    def h(self) -> float:
        return 2.0 * self.R / self.N

    @property
    def dt(self) -> float:
        return self.T / self.M

    @property
    def shape(self) -> tuple:
        return (self.N,) * self.d

    @property
    def cell_volume(self) -> float:
        return self.h ** self.d

    def axis(self) -> np.ndarray:
        return -self.R + self.h * np.arange(self.N)

    def coords(self):
        """Coordinate arrays, one per axis (meshgrid 'ij' in 2D)."""
        ax = self.axis()
        if self.d == 1:
            return (ax,)
        return np.meshgrid(ax, ax, indexing="ij")

    def wavenumbers(self):
        """Angular frequencies per axis for the torus of period 2R."""
        k = 2 * np.pi * np.fft.fftfreq(self.N, d=self.h)
        if self.d == 1:
            return (k,)
        return np.meshgrid(k, k, indexing="ij")

    def times(self) -> np.ndarray:
        return np.linspace(0.0, self.T, self.M + 1)


@dataclass
class GridFunction:
    values: np.ndarray
    grid: GridSpec

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=np.float64)
        if self.values.shape != self.grid.shape:
            raise ValueError(
                f"values shape {self.values.shape} does not match grid {self.grid.shape}")
        if not np.all(np.isfinite(self.values)):
            raise ValueError("grid function contains non-finite values")

    def sup_norm(self) -> float:
        return float(np.max(np.abs(self.values)))

    @staticmethod
    def constant(c: float, grid: GridSpec) -> "GridFunction":
        return GridFunction(np.full(grid.shape, float(c)), grid)


@dataclass
class ProbabilityVector:
    """Nonnegative cell masses summing to one."""

    weights: np.ndarray
    grid: GridSpec
    _ops: int = field(default=0, repr=False)  # arithmetic steps since init, for the drift budget

    def __post_init__(self):
        self.weights = np.asarray(self.weights, dtype=np.float64)
        if self.weights.shape != self.grid.shape:
            raise ValueError("weights shape does not match grid")
        if np.min(self.weights) < -1e-14:
            raise ValueError(f"negative mass {np.min(self.weights)}")
        drift = abs(float(np.sum(self.weights)) - 1.0)
        budget = 1e-12 * max(1, self._ops)
        if drift > budget:
            raise ValueError(f"total mass off by {drift:.3e} (budget {budget:.3e})")

    def total_mass(self) -> float:
        return float(np.sum(self.weights))

    def expectation(self, f: np.ndarray) -> float:
        """m[f] = sum_i f(x_i) * mass_i."""
        return float(np.sum(np.asarray(f) * self.weights))

    @staticmethod
    def uniform(grid: GridSpec) -> "ProbabilityVector":
        n = grid.N ** grid.d
        return ProbabilityVector(np.full(grid.shape, 1.0 / n), grid)

    @staticmethod
    def from_density(density: np.ndarray, grid: GridSpec) -> "ProbabilityVector":
        w = np.asarray(density, dtype=np.float64) * grid.cell_volume
        s = w.sum()
        if s <= 0:
            raise ValueError("density must have positive mass")
        return ProbabilityVector(w / s, grid)

    @staticmethod
    def dirac(index, grid: GridSpec) -> "ProbabilityVector":
        w = np.zeros(grid.shape)
        w[index] = 1.0
        return ProbabilityVector(w, grid)


@dataclass
class CheckReport:
    """Result of one verification sweep: per-slice bound vs measurement.

    Rows are (label, bound, measured, violation) with violation =
    measured - bound; the report passes when the worst violation is <= 0.
    """

    name: str
    rows: list

    @property
    def max_violation(self) -> float:
        return max((r[3] for r in self.rows), default=0.0)

    @property
    def passed(self) -> bool:
        return self.max_violation <= 0.0

    def write_csv(self, path) -> None:
        with open(path, "w") as fh:
            fh.write("check,slice,bound,measured,violation,pass\n")
            for label, bound, measured, violation in self.rows:
                ok = violation <= 0.0
                fh.write(f"{self.name},{label!r},{float(bound)!r},"
                         f"{float(measured)!r},{float(violation)!r},{ok}\n")


def adjoint(op):
    """Transpose stencil: offsets negated, weights kept.

    <L phi, m> = <phi, L* m> holds to round-off for all phi, m because the
    stencil is a finite matrix and this is its exact transpose.
    """
    from .levy import DiscreteLevyOp

    return DiscreteLevyOp(
        epsilon=op.epsilon,
        offsets=(-op.offsets) % op.grid.N,
        weights=op.weights.copy(),
        grid=op.grid,
        snap_error=op.snap_error,
        meta=dict(op.meta, adjoint=not op.meta.get("adjoint", False)),
    )


def spectral_reference(triplet, phi: GridFunction, t: float,
                       adjoint_op: bool = False) -> GridFunction:
    """exp(t * symbol) applied to phi through the FFT.

    Ground truth for the linear evolutions (F(z)=z, or constant b): the
    operator is translation invariant, so each Fourier mode evolves
    independently by its closed-form symbol.
    """
    from .levy import symbol as levy_symbol

    if t < 0:
        raise ValueError("time must be nonnegative")
    g = phi.grid
    ks = g.wavenumbers()
    psi = levy_symbol(triplet, ks)
    if adjoint_op:
        psi = np.conj(psi)
    hat = np.fft.fftn(phi.values) * np.exp(t * psi)
    out = np.real(np.fft.ifftn(hat))
    return GridFunction(out, g)


def write_binary(path, values: np.ndarray, grid: GridSpec) -> None:
    arr = np.ascontiguousarray(values, dtype="<f8")
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MAGIC, grid.d, grid.N, grid.R, grid.T, grid.M))
        fh.write(arr.tobytes(order="C"))


def read_binary(path):
    with open(path, "rb") as fh:
        head = fh.read(_HEADER.size)
        magic, d, N, R, T, M = _HEADER.unpack(head)
        if magic != MAGIC:
            raise ValueError(f"bad magic {magic!r}, expected {MAGIC!r}")
        grid = GridSpec(d=d, R=R, N=N, T=T, M=M)
        payload = fh.read(8 * N ** d)
        arr = np.frombuffer(payload, dtype="<f8").reshape(grid.shape).copy()
    return arr, grid


def write_csv(path, values: np.ndarray, grid: GridSpec) -> None:
    """Flat listing: index, coordinate(s), value."""
    with open(path, "w") as fh:
        if grid.d == 1:
            fh.write("index,x,value\n")
            ax = grid.axis()
            for i, (x, v) in enumerate(zip(ax, values)):
                fh.write(f"{i},{float(x)!r},{float(v)!r}\n")
        else:
            fh.write("index,x0,x1,value\n")
            X0, X1 = grid.coords()
            flat = values.reshape(-1)
            for i, (x0, x1, v) in enumerate(zip(X0.reshape(-1), X1.reshape(-1), flat)):
                fh.write(f"{i},{float(x0)!r},{float(x1)!r},{float(v)!r}\n")
