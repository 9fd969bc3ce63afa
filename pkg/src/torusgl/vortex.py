"""Gauge-invariant supercurrent, Jacobian, integer plaquette vorticity with
its mass and Chern pairing, plus an H^-1 distance between 2-cochains.

The supercurrent is discretized as the exact derivative of the compact
kinetic term with respect to the gauge field, so the discrete second
Ginzburg-Landau equation d*F = j holds at critical points and the London
identity -Delta F + F = 2J is exact there.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import sqrt

import numpy as np

from . import hodge
from .bundle import BundleData, Section, curvature, edge_phases
from .lattice import (
    Cochain,
    TorusGeometry,
    components,
    exterior_derivative,
    inner_product,
)

__all__ = [
    "VorticityField",
    "ZeroOnPlaquetteError",
    "supercurrent",
    "jacobian",
    "vorticity",
    "vorticity_density",
    "chern_pairing",
    "vortex_mass",
    "h_minus1_distance",
    "single_dual_loop",
    "sparse_windings",
]


class ZeroOnPlaquetteError(RuntimeError):
    """Vorticity undefined: u vanishes on a plaquette corner.

    Carries the flagged plaquettes as (component, site index) tuples; the
    caller decides whether to perturb u or treat the winding as undefined.
    """

    def __init__(self, plaquettes):
        self.plaquettes = plaquettes
        super().__init__(
            f"u vanishes on a corner of {len(plaquettes)} plaquette(s); "
            "winding undefined there"
        )


@dataclass
class VorticityField:
    """Integer winding per oriented plaquette: the discrete vortex current."""

    geom: TorusGeometry
    windings: np.ndarray = field(repr=False)  # int64, shape (C(n,2), *sites)

    def total(self) -> int:
        return int(self.windings.sum())


def supercurrent(u: Section, A: Cochain, b: BundleData) -> Cochain:
    """Pre-Jacobian 1-cochain j_e = Im(conj(u(x)) u(y) e^{-i phase_e}) / h_i.

    Exactly gauge invariant; equals minus the gauge-field derivative of the
    kinetic energy density, so critical points satisfy d*F = j.
    """
    phases = edge_phases(A, b)
    h = b.geom.spacings
    vals = np.empty((b.geom.dim, *b.geom.sites))
    for i in range(b.geom.dim):
        hop = np.conj(u.values) * np.roll(u.values, -1, axis=i) * np.exp(-1j * phases[i])
        vals[i] = hop.imag / h[i]
    return Cochain(b.geom, 1, vals)


def jacobian(u: Section, A: Cochain, b: BundleData) -> Cochain:
    """Gauge-invariant Jacobian 2-cochain: (1/2) d j(u, A) + (1/2) F_A."""
    return 0.5 * exterior_derivative(supercurrent(u, A, b)) + 0.5 * curvature(A, b)


def vorticity(u: Section, A: Cochain, b: BundleData, residue_tol: float = 1e-8) -> VorticityField:
    """Integer plaquette winding of the gauge-invariant phase plus flux.

    n_p = (1/2 pi) ( sum_{e in boundary p} wrap(arg u(head) - arg u(tail)
          - theta0_e - h A_e) + h_i h_j F_ij(p) ),

    an exact integer for nonvanishing u; slice sums over closed coordinate
    2-tori reproduce the Chern numbers exactly.
    """
    geom = b.geom
    zero_sites = (np.abs(u.values) == 0.0)
    phases = edge_phases(A, b)
    # gauge-invariant wrapped phase increment per edge
    delta = np.empty_like(phases)
    for i in range(geom.dim):
        hop = np.conj(u.values) * np.roll(u.values, -1, axis=i) * np.exp(-1j * phases[i])
        delta[i] = np.angle(hop)

    F = curvature(A, b)
    raw = np.empty(geom.shape(2))
    flagged = []
    for pos, (i, j) in enumerate(components(geom.dim, 2)):
        circ = (
            delta[i]
            + np.roll(delta[j], -1, axis=i)
            - np.roll(delta[i], -1, axis=j)
            - delta[j]
        )
        hihj = geom.spacings[i] * geom.spacings[j]
        raw[pos] = (circ + hihj * F.values[pos]) / (2.0 * np.pi)
        if zero_sites.any():
            corner_zero = (
                zero_sites
                | np.roll(zero_sites, -1, axis=i)
                | np.roll(zero_sites, -1, axis=j)
                | np.roll(np.roll(zero_sites, -1, axis=i), -1, axis=j)
            )
            for site in np.argwhere(corner_zero):
                flagged.append((pos, tuple(int(s) for s in site)))
    if flagged:
        raise ZeroOnPlaquetteError(flagged)

    rounded = np.round(raw)
    residue = np.abs(raw - rounded).max()
    if residue > residue_tol:
        raise ValueError(
            f"vorticity integrality residue {residue:.3e} exceeds {residue_tol:.1e}"
        )
    return VorticityField(geom, rounded.astype(np.int64))


def vorticity_density(v: VorticityField) -> Cochain:
    """2-cochain with component samples n_p / (h_i h_j); its Chern pairing
    equals the winding slice sums."""
    geom = v.geom
    vals = np.empty(geom.shape(2))
    for pos, (i, j) in enumerate(components(geom.dim, 2)):
        vals[pos] = v.windings[pos] / (geom.spacings[i] * geom.spacings[j])
    return Cochain(geom, 2, vals)


def chern_pairing(v: VorticityField) -> np.ndarray:
    """Antisymmetric integer matrix of slice sums; raises if parallel slices
    of the same orientation disagree (they cannot for a closed current)."""
    geom = v.geom
    n = geom.dim
    out = np.zeros((n, n), dtype=np.int64)
    for pos, (i, j) in enumerate(components(n, 2)):
        slice_sums = v.windings[pos].sum(axis=(i, j))
        slice_sums = np.atleast_1d(slice_sums)
        if np.any(slice_sums != slice_sums.flat[0]):
            raise ValueError(f"inconsistent ({i},{j})-slice sums: {slice_sums}")
        out[i, j] = slice_sums.flat[0]
        out[j, i] = -out[i, j]
    return out


def vortex_mass(v: VorticityField, geom: TorusGeometry | None = None) -> float:
    """Mass of the vortex current: sum |n_p| (n=2) or sum |n_p| h_transverse (n=3)."""
    geom = geom or v.geom
    n = geom.dim
    if n == 2:
        return float(np.abs(v.windings).sum())
    total = 0.0
    for pos, (i, j) in enumerate(components(n, 2)):
        (transverse,) = set(range(n)) - {i, j}
        total += float(np.abs(v.windings[pos]).sum()) * geom.spacings[transverse]
    return total


def h_minus1_distance(a: Cochain, b: Cochain) -> float:
    """H^-1 proxy metric: sqrt(<a-b, (-Delta + I)^{-1}(a-b)>)."""
    diff = a - b
    val = inner_product(diff, hodge.solve_london(diff))
    return sqrt(max(val, 0.0))


def london_residual(u: Section, A: Cochain, b: BundleData) -> float:
    """Normalized defect of the London identity, ||-Delta F + F - 2J|| / (1 + ||F||).

    Exactly zero at discrete critical points, where d*F = j and dF = 0.
    """
    from .lattice import laplacian, norm

    F = curvature(A, b)
    defect = -1.0 * laplacian(F) + F - 2.0 * jacobian(u, A, b)
    return norm(defect) / (1.0 + norm(F))


def sparse_windings(v: VorticityField):
    """Nonzero windings as (component, site..., winding) tuples, row-major order."""
    out = []
    for pos in range(v.windings.shape[0]):
        for site in np.argwhere(v.windings[pos] != 0):
            key = (pos, *(int(s) for s in site))
            out.append((*key, int(v.windings[pos][tuple(site)])))
    return out


def single_dual_loop(v: VorticityField) -> tuple[bool, int]:
    """Whether the n=3 vorticity support is one closed loop of unit windings
    in the dual lattice; returns (is_single_loop, loop_length_in_edges).

    A plaquette with component (i,j) at base x is dual to the edge joining
    the cubes at x - e_k and x, k the transverse axis.
    """
    geom = v.geom
    if geom.dim != 3:
        raise ValueError("dual loop decomposition is defined for n = 3")
    edges = []  # (cube_a, cube_b) per unit of |winding|
    for pos, (i, j) in enumerate(components(3, 2)):
        (k,) = set(range(3)) - {i, j}
        for site in np.argwhere(v.windings[pos] != 0):
            w = int(v.windings[pos][tuple(site)])
            cube_b = tuple(int(s) for s in site)
            back = list(cube_b)
            back[k] = (back[k] - 1) % geom.sites[k]
            edges.extend([(tuple(back), cube_b)] * abs(w))
    if not edges:
        return False, 0
    degree: dict[tuple, int] = {}
    adj: dict[tuple, list] = {}
    for a, b2 in edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b2] = degree.get(b2, 0) + 1
        adj.setdefault(a, []).append(b2)
        adj.setdefault(b2, []).append(a)
    if any(d != 2 for d in degree.values()):
        return False, len(edges)
    start = next(iter(adj))
    seen = {start}
    stack = [start]
    while stack:
        node = stack.pop()
        for nb in adj[node]:
            if nb not in seen:
                seen.add(nb)
                stack.append(nb)
    return len(seen) == len(adj), len(edges)
