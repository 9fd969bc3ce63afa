"""Periodic cubical lattice on a flat torus, with cochains and the discrete
exterior calculus operators d, d*, Laplacian.

Conventions
-----------
A degree-k cochain stores one real sample per oriented k-cell, interpreted as
the pointwise component of a k-form: the value on an x_i-edge based at site x
is the omega_i component there, the value on an (i,j)-plaquette is omega_ij.
Components are ordered lexicographically over sorted axis tuples.

The exterior derivative uses scaled forward differences,

    (d phi)_i(x)  = (phi(x + e_i) - phi(x)) / h_i
    (d A)_ij(x)   = (A_j(x + e_i) - A_j(x)) / h_i - (A_i(x + e_j) - A_i(x)) / h_j

and the codifferential is its exact adjoint for the diagonal L2 product with
uniform weight prod(h_i) per cell sample.  On the flat torus the resulting
Hodge Laplacian acts component-wise as the standard second-difference stencil,
so every solver downstream is spectral.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np

__all__ = [
    "TorusGeometry",
    "Cochain",
    "components",
    "zero_cochain",
    "constant_cochain",
    "random_cochain",
    "exterior_derivative",
    "codifferential",
    "inner_product",
    "norm",
    "laplacian",
    "stencil_eigenvalues",
    "write_field",
    "read_field",
]


@lru_cache(maxsize=None)
def components(n: int, k: int) -> tuple[tuple[int, ...], ...]:
    """Sorted axis tuples indexing the C(n,k) components of a k-cochain."""
    return tuple(itertools.combinations(range(n), k))


@lru_cache(maxsize=None)
def _component_index(n: int, k: int) -> dict[tuple[int, ...], int]:
    return {comp: idx for idx, comp in enumerate(components(n, k))}


@dataclass(frozen=True)
class TorusGeometry:
    """Flat periodic lattice: per-axis site counts and physical lengths."""

    sites: tuple[int, ...]
    lengths: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "sites", tuple(int(s) for s in self.sites))
        object.__setattr__(self, "lengths", tuple(float(L) for L in self.lengths))
        n = len(self.sites)
        if n not in (2, 3):
            raise ValueError(f"dimension must be 2 or 3, got {n}")
        if len(self.lengths) != n:
            raise ValueError("sites and lengths must have equal length")
        if any(s < 4 for s in self.sites):
            raise ValueError(f"need N_i >= 4 on every axis, got {self.sites}")
        if any(L <= 0.0 for L in self.lengths):
            raise ValueError(f"need L_i > 0 on every axis, got {self.lengths}")

    @property
    def dim(self) -> int:
        return len(self.sites)

    @property
    def spacings(self) -> tuple[float, ...]:
        return tuple(L / N for L, N in zip(self.lengths, self.sites))

    @property
    def volume(self) -> float:
        return math.prod(self.lengths)

    @property
    def cell_volume(self) -> float:
        """Quadrature weight prod(h_i), shared by samples of every degree."""
        return math.prod(self.spacings)

    @property
    def n_sites(self) -> int:
        return math.prod(self.sites)

    def n_cells(self, k: int) -> int:
        return math.comb(self.dim, k) * self.n_sites

    def shape(self, k: int) -> tuple[int, ...]:
        return (math.comb(self.dim, k), *self.sites)

    def coordinates(self, axis: int) -> np.ndarray:
        """Physical coordinate of each site along one axis, broadcast-ready."""
        h = self.spacings[axis]
        shape = [1] * self.dim
        shape[axis] = self.sites[axis]
        return (h * np.arange(self.sites[axis])).reshape(shape)


@dataclass
class Cochain:
    """Degree-k discrete form: array of shape (C(n,k), N_1, ..., N_n)."""

    geom: TorusGeometry
    degree: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if not 0 <= self.degree <= self.geom.dim:
            raise ValueError(f"degree {self.degree} out of range for n={self.geom.dim}")
        vals = np.asarray(self.values, dtype=np.float64)
        if vals.shape != self.geom.shape(self.degree):
            raise ValueError(
                f"values shape {vals.shape} != expected {self.geom.shape(self.degree)}"
            )
        self.values = vals

    def copy(self) -> "Cochain":
        return Cochain(self.geom, self.degree, self.values.copy())

    def _check_compatible(self, other: "Cochain"):
        if self.degree != other.degree or self.geom != other.geom:
            raise ValueError("cochain degree/geometry mismatch")

    def __add__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.geom, self.degree, self.values + other.values)

    def __sub__(self, other: "Cochain") -> "Cochain":
        self._check_compatible(other)
        return Cochain(self.geom, self.degree, self.values - other.values)

    def __neg__(self) -> "Cochain":
        return Cochain(self.geom, self.degree, -self.values)

    def __mul__(self, scalar: float) -> "Cochain":
        return Cochain(self.geom, self.degree, self.values * float(scalar))

    __rmul__ = __mul__


def zero_cochain(geom: TorusGeometry, degree: int) -> Cochain:
    return Cochain(geom, degree, np.zeros(geom.shape(degree)))


def constant_cochain(geom: TorusGeometry, degree: int, value) -> Cochain:
    """Cochain with constant components; `value` is scalar or one per component."""
    vals = np.zeros(geom.shape(degree))
    vals += np.reshape(value, (-1, *([1] * geom.dim)))
    return Cochain(geom, degree, vals)


def random_cochain(geom: TorusGeometry, degree: int, rng: np.random.Generator) -> Cochain:
    return Cochain(geom, degree, rng.standard_normal(geom.shape(degree)))


def _forward_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    return (np.roll(arr, -1, axis=axis) - arr) / h


def _neg_backward_diff(arr: np.ndarray, axis: int, h: float) -> np.ndarray:
    # adjoint of the forward difference under the uniform cell weight
    return (np.roll(arr, +1, axis=axis) - arr) / h


def exterior_derivative(c: Cochain) -> Cochain:
    """Scaled forward-difference d: degree k -> k+1.  d(d(.)) = 0 exactly."""
    n, k = c.geom.dim, c.degree
    if k >= n:
        raise ValueError(f"exterior_derivative needs degree < {n}, got {k}")
    h = c.geom.spacings
    idx_in = _component_index(n, k)
    out = np.zeros(c.geom.shape(k + 1))
    for j_pos, J in enumerate(components(n, k + 1)):
        for m, axis in enumerate(J):
            I = J[:m] + J[m + 1:]
            sign = -1.0 if m % 2 else 1.0
            out[j_pos] += sign * _forward_diff(c.values[idx_in[I]], axis, h[axis])
    return Cochain(c.geom, k + 1, out)


def codifferential(c: Cochain) -> Cochain:
    """Exact adjoint of `exterior_derivative` for the lattice L2 product."""
    n, k = c.geom.dim, c.degree
    if k < 1:
        raise ValueError(f"codifferential needs degree >= 1, got {k}")
    h = c.geom.spacings
    idx_out = _component_index(n, k - 1)
    out = np.zeros(c.geom.shape(k - 1))
    for j_pos, J in enumerate(components(n, k)):
        for m, axis in enumerate(J):
            I = J[:m] + J[m + 1:]
            sign = -1.0 if m % 2 else 1.0
            out[idx_out[I]] += sign * _neg_backward_diff(c.values[j_pos], axis, h[axis])
    return Cochain(c.geom, k - 1, out)


def inner_product(a: Cochain, b: Cochain) -> float:
    """Diagonal L2 product: sum of products times the cell volume prod(h_i)."""
    a._check_compatible(b)
    return float(np.sum(a.values * b.values) * a.geom.cell_volume)


def norm(c: Cochain) -> float:
    return math.sqrt(max(inner_product(c, c), 0.0))


def laplacian(c: Cochain) -> Cochain:
    """Hodge Laplacian with the geometer's sign: Delta = -(dd* + d*d).

    -laplacian(.) is symmetric positive semidefinite; on the flat torus its
    kernel in degree k is the constant-component cochains, dimension C(n,k).
    """
    n, k = c.geom.dim, c.degree
    parts = zero_cochain(c.geom, k)
    if k < n:
        parts = parts + codifferential(exterior_derivative(c))
    if k > 0:
        parts = parts + exterior_derivative(codifferential(c))
    return -parts


@lru_cache(maxsize=32)
def _stencil_eigenvalues_cached(sites: tuple[int, ...], lengths: tuple[float, ...]) -> np.ndarray:
    lam = np.zeros(sites)
    for axis, (N, L) in enumerate(zip(sites, lengths)):
        h = L / N
        shape = [1] * len(sites)
        shape[axis] = N
        freq = (2.0 / h**2) * (1.0 - np.cos(2.0 * np.pi * np.arange(N) / N))
        lam = lam + freq.reshape(shape)
    return lam


def stencil_eigenvalues(geom: TorusGeometry) -> np.ndarray:
    """Eigenvalues of -Delta per Fourier mode: sum_i (2/h_i^2)(1 - cos(2 pi k_i/N_i)).

    The same array diagonalizes every degree component-wise.
    """
    return _stencil_eigenvalues_cached(geom.sites, geom.lengths)


# ----------------------------------------------------------------------------
# field dump format (repo-wide): one header line
#   degree n N_1..N_n L_1..L_n component_count
# followed by whitespace-separated values, component-major, site row-major.
# ----------------------------------------------------------------------------

def write_field(path, geom: TorusGeometry, degree: int, values: np.ndarray) -> None:
    """Dump a (ncomp, N_1, ..., N_n) real array losslessly (17 sig. digits)."""
    values = np.asarray(values, dtype=np.float64)
    ncomp = values.shape[0]
    header = " ".join(
        [str(int(degree)), str(geom.dim)]
        + [str(N) for N in geom.sites]
        + [f"{L:.17g}" for L in geom.lengths]
        + [str(ncomp)]
    )
    flat = values.reshape(ncomp, -1)
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for comp in flat:
            fh.write(" ".join(f"{v:.17g}" for v in comp) + "\n")


def read_field(path) -> tuple[TorusGeometry, int, np.ndarray]:
    """Inverse of `write_field`; returns (geometry, degree, values)."""
    with open(path) as fh:
        head = fh.readline().split()
        degree = int(head[0])
        n = int(head[1])
        sites = tuple(int(s) for s in head[2:2 + n])
        lengths = tuple(float(s) for s in head[2 + n:2 + 2 * n])
        ncomp = int(head[2 + 2 * n])
        data = np.loadtxt(fh, dtype=np.float64).reshape(-1)
    geom = TorusGeometry(sites, lengths)
    values = data.reshape(ncomp, *sites)
    return geom, degree, values
