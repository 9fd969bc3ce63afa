"""Hermitian line bundle data on the periodic lattice: Chern integers, the
constant-curvature background connection, and the covariant difference.

The bundle is carried entirely by per-edge background phases theta0 (the
holonomy picked up when traversing an edge forward), so sections stay plain
periodic complex vertex fields.  theta0 realizes a uniform flux
2 pi c_ij / (N_i N_j) per (i,j)-plaquette via linear (Landau-type) phases on
the j-links plus a wrap-around seam correction on the i-links, making both
holonomy/flux consistency and the Chern pairing hold exactly.

The covariant difference uses compact (exponential) coupling of the gauge
field, so lattice gauge transformations leave |D_A u| invariant exactly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .lattice import Cochain, TorusGeometry, components, exterior_derivative, zero_cochain

__all__ = [
    "Section",
    "Gauge1Form",
    "BundleData",
    "gauge_one_form",
    "build_background",
    "covariant_difference",
    "curvature",
    "flux_pairing",
    "holonomy_residuals",
]

# a gauge field is just a real 1-cochain; the alias documents intent
Gauge1Form = Cochain


def gauge_one_form(geom: TorusGeometry, values=None) -> Cochain:
    """Degree-1 cochain constructor for connection fluctuations A."""
    if values is None:
        return zero_cochain(geom, 1)
    return Cochain(geom, 1, values)


@dataclass
class Section:
    """Complex vertex field u in the global unitary frame fixed by theta0."""

    geom: TorusGeometry
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        vals = np.asarray(self.values, dtype=np.complex128)
        if vals.shape != self.geom.sites:
            raise ValueError(f"section shape {vals.shape} != sites {self.geom.sites}")
        self.values = vals

    def copy(self) -> "Section":
        return Section(self.geom, self.values.copy())


def constant_section(geom: TorusGeometry, value: complex = 1.0) -> Section:
    return Section(geom, np.full(geom.sites, value, dtype=np.complex128))


@dataclass
class BundleData:
    """Chern integers, background link phases, constant reference curvature."""

    geom: TorusGeometry
    chern: np.ndarray = field(repr=False)     # antisymmetric integer matrix
    theta0: np.ndarray = field(repr=False)    # radians per oriented edge, shape (n, *sites)
    f0: Cochain = field(repr=False)           # constant 2-cochain, F0_ij = 2 pi c_ij/(L_i L_j)

    def chern_entry(self, i: int, j: int) -> int:
        return int(self.chern[i, j])

    @property
    def is_trivial(self) -> bool:
        return not np.any(self.chern)


def build_background(geom: TorusGeometry, chern) -> BundleData:
    """Background bundle with uniform flux 2 pi c_ij/(N_i N_j) per plaquette.

    `chern` is an antisymmetric integer matrix (only i<j entries are read).
    """
    n = geom.dim
    chern = np.asarray(chern)
    if chern.shape != (n, n):
        raise ValueError(f"chern matrix must be {n}x{n}, got {chern.shape}")
    if not np.all(chern == np.round(chern)):
        raise ValueError("chern matrix entries must be integers")
    chern = chern.astype(np.int64)
    if np.any(chern + chern.T != 0):
        raise ValueError("chern matrix must be antisymmetric")

    theta0 = np.zeros((n, *geom.sites))
    idx = np.indices(geom.sites)
    for i in range(n):
        for j in range(i + 1, n):
            c = int(chern[i, j])
            if c == 0:
                continue
            phi = 2.0 * np.pi * c / (geom.sites[i] * geom.sites[j])
            # Landau phases on j-links, graded along axis i
            theta0[j] += phi * idx[i]
            # seam correction on the i-links of the last slab along axis i
            seam = [slice(None)] * n
            seam[i] = geom.sites[i] - 1
            theta0[(i, *seam)] += -phi * geom.sites[i] * idx[j][tuple(seam)]

    f0_comps = np.zeros(geom.shape(2)[0])
    for pos, (i, j) in enumerate(components(n, 2)):
        f0_comps[pos] = 2.0 * np.pi * chern[i, j] / (geom.lengths[i] * geom.lengths[j])
    f0_vals = np.zeros(geom.shape(2))
    f0_vals += f0_comps.reshape(-1, *([1] * n))
    f0 = Cochain(geom, 2, f0_vals)

    return BundleData(geom=geom, chern=chern, theta0=theta0, f0=f0)


def plaquette_circulation(edge_field: np.ndarray, geom: TorusGeometry) -> np.ndarray:
    """Oriented boundary sum of a raw per-edge field over every plaquette."""
    n = geom.dim
    out = np.zeros(geom.shape(2))
    for pos, (i, j) in enumerate(components(n, 2)):
        ei, ej = edge_field[i], edge_field[j]
        out[pos] = ei + np.roll(ej, -1, axis=i) - np.roll(ei, -1, axis=j) - ej
    return out


def holonomy_residuals(b: BundleData) -> np.ndarray:
    """Per-plaquette residue of (sum theta0 over boundary) - h_i h_j F0_ij mod 2 pi."""
    geom = b.geom
    circ = plaquette_circulation(b.theta0, geom)
    res = np.zeros_like(circ)
    for pos, (i, j) in enumerate(components(geom.dim, 2)):
        target = geom.spacings[i] * geom.spacings[j] * b.f0.values[pos]
        diff = circ[pos] - target
        res[pos] = diff - 2.0 * np.pi * np.round(diff / (2.0 * np.pi))
    return res


def edge_phases(A: Cochain, b: BundleData) -> np.ndarray:
    """Total traversal phase per edge: theta0_e + h_i A_e."""
    if A.degree != 1 or A.geom != b.geom:
        raise ValueError("gauge field must be a degree-1 cochain on the bundle geometry")
    h = b.geom.spacings
    return b.theta0 + np.stack([h[i] * A.values[i] for i in range(b.geom.dim)])


def covariant_difference(u: Section, A: Cochain, b: BundleData) -> np.ndarray:
    """Compact-coupling covariant difference, one complex value per edge:

        (D_A u)_e = (u(x + e_i) exp(-i(theta0_e + h_i A_e)) - u(x)) / h_i
    """
    if u.geom != b.geom:
        raise ValueError("section/bundle geometry mismatch")
    phases = edge_phases(A, b)
    h = b.geom.spacings
    out = np.empty((b.geom.dim, *b.geom.sites), dtype=np.complex128)
    for i in range(b.geom.dim):
        out[i] = (np.roll(u.values, -1, axis=i) * np.exp(-1j * phases[i]) - u.values) / h[i]
    return out


def curvature(A: Cochain, b: BundleData) -> Cochain:
    """Real curvature 2-cochain F_A = F0 + dA; closed and gauge invariant."""
    return b.f0 + exterior_derivative(A)


def write_bundle(path_prefix: str, b: BundleData) -> None:
    """Serialize as the Chern matrix (text) plus the theta0 field dump."""
    from .lattice import write_field

    np.savetxt(f"{path_prefix}.chern", b.chern, fmt="%d")
    write_field(f"{path_prefix}.theta0", b.geom, 1, b.theta0)


def read_bundle(path_prefix: str) -> BundleData:
    """Rebuild bundle data written by `write_bundle`; f0 is reconstructed
    from the Chern matrix, and both type invariants are re-validated."""
    from .lattice import read_field

    chern = np.loadtxt(f"{path_prefix}.chern", dtype=np.int64, ndmin=2)
    geom, degree, theta0 = read_field(f"{path_prefix}.theta0")
    if degree != 1:
        raise ValueError(f"theta0 dump has degree {degree}, expected 1")
    rebuilt = build_background(geom, chern)
    out = BundleData(geom=geom, chern=rebuilt.chern, theta0=theta0, f0=rebuilt.f0)
    res = holonomy_residuals(out)
    if np.abs(res).max() > 1e-12:
        raise ValueError(f"stored theta0 violates the flux invariant by {np.abs(res).max():.2e}")
    return out


def flux_pairing(F: Cochain) -> np.ndarray:
    """Chern pairing of a 2-cochain: (1/2 pi) sum over an (i,j)-slice of
    h_i h_j F_ij, averaged over the transverse positions (all slices agree
    exactly for curvature cochains).  Returns an antisymmetric float matrix.
    """
    geom = F.geom
    n = geom.dim
    out = np.zeros((n, n))
    for pos, (i, j) in enumerate(components(n, 2)):
        w = geom.spacings[i] * geom.spacings[j] / (2.0 * np.pi)
        slab = F.values[pos].sum(axis=(i, j)) * w
        val = float(np.mean(slab))
        out[i, j] = val
        out[j, i] = -val
    return out
