"""Hodge decomposition, harmonic projection, Green's operator, and the
Poisson / London solvers for periodic cochains.

On the flat torus every operator here is diagonal in the Fourier basis,
component by component, with the second-difference multiplier from
`lattice.stencil_eigenvalues`.  The spectral path is exact to rounding for
any (also anisotropic) spacings; a plain conjugate-gradient fallback is kept
behind ``method="cg"`` as an independent cross-check.

Sign conventions follow Delta = -(dd* + d*d): the Green operator solves
Delta G(w) = w - H(w) with H(G(w)) = 0, i.e. a single Fourier mode with
stencil eigenvalue lam of -Delta maps to mode / (-lam).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .lattice import (
    Cochain,
    TorusGeometry,
    codifferential,
    exterior_derivative,
    inner_product,
    laplacian,
    norm,
    stencil_eigenvalues,
    zero_cochain,
)

__all__ = [
    "HodgeParts",
    "NonCompatibleSourceError",
    "SolverDivergedError",
    "harmonic_projection",
    "green",
    "hodge_decompose",
    "solve_london",
    "solve_poisson",
    "harmonic_dimension",
]


class NonCompatibleSourceError(ValueError):
    """Poisson source has a harmonic part exceeding tolerance."""


class SolverDivergedError(RuntimeError):
    """Iterative fallback failed to reach tolerance; carries the residual."""

    def __init__(self, message: str, residual: float):
        super().__init__(f"{message} (residual {residual:.3e})")
        self.residual = residual


@dataclass
class HodgeParts:
    """Orthogonal splitting w = d(exact_potential) + d*(coexact_potential) + harmonic."""

    exact_potential: Cochain | None      # degree k-1, None when k = 0
    coexact_potential: Cochain | None    # degree k+1, None when k = n
    harmonic: Cochain                    # degree k, constant components

    def reconstruct(self) -> Cochain:
        out = self.harmonic.copy()
        if self.exact_potential is not None:
            out = out + exterior_derivative(self.exact_potential)
        if self.coexact_potential is not None:
            out = out + codifferential(self.coexact_potential)
        return out


def harmonic_projection(c: Cochain) -> Cochain:
    """Per-component mean: the harmonic part on the flat torus.

    Exactly idempotent: constant inputs are returned unchanged, so applying
    the projector twice is bitwise stable even when the mean of N identical
    values would round (N not a power of two).
    """
    flat = c.values.reshape(c.values.shape[0], -1)
    if np.array_equal(flat, np.broadcast_to(flat[:, :1], flat.shape)):
        return Cochain(c.geom, c.degree, c.values.copy())
    axes = tuple(range(1, c.geom.dim + 1))
    means = c.values.mean(axis=axes, keepdims=True)
    return Cochain(c.geom, c.degree, np.broadcast_to(means, c.values.shape).copy())


def harmonic_dimension(geom: TorusGeometry, degree: int, tol: float = 1e-10) -> int:
    """Count of -Delta stencil eigenvalues below `tol`, summed over components.

    Cross-checks the hard-coded harmonic space: must equal C(n, k).
    """
    lam = stencil_eigenvalues(geom)
    ncomp = geom.shape(degree)[0]
    return int(np.count_nonzero(lam < tol)) * ncomp


def _spectral_multiply(c: Cochain, multiplier: np.ndarray) -> Cochain:
    out = np.empty_like(c.values)
    for comp in range(c.values.shape[0]):
        spec = np.fft.fftn(c.values[comp]) * multiplier
        out[comp] = np.fft.ifftn(spec).real
    return Cochain(c.geom, c.degree, out)


def green(c: Cochain) -> Cochain:
    """Green operator: Delta green(c) = c - H(c), with H(green(c)) = 0."""
    lam = stencil_eigenvalues(c.geom)
    mult = np.zeros_like(lam)
    nonzero = lam > 0.0
    mult[nonzero] = -1.0 / lam[nonzero]
    return _spectral_multiply(c, mult)


def hodge_decompose(c: Cochain) -> HodgeParts:
    """Split into exact + coexact + harmonic parts (exact to solver precision).

    Potentials are chosen mean-free: exact part = d(d* w), coexact part =
    d*(d w), with w the sign-flipped Green potential, so that the
    reconstruction returns the input.
    """
    k, n = c.degree, c.geom.dim
    w = -1.0 * green(c)  # (dd* + d*d) w = c - H(c)
    phi = codifferential(w) if k >= 1 else None
    psi = exterior_derivative(w) if k <= n - 1 else None
    xi = harmonic_projection(c)
    return HodgeParts(exact_potential=phi, coexact_potential=psi, harmonic=xi)


def _cg_solve(apply_op, rhs: Cochain, tol: float, max_iter: int) -> Cochain:
    """Plain conjugate gradients on cochains for an SPD operator."""
    x = zero_cochain(rhs.geom, rhs.degree)
    r = rhs.copy()
    p = r.copy()
    rs = inner_product(r, r)
    target = tol * max(np.sqrt(rs), 1e-300)
    for _ in range(max_iter):
        if np.sqrt(rs) <= target:
            return x
        Ap = apply_op(p)
        alpha = rs / inner_product(p, Ap)
        x = x + alpha * p
        r = r - alpha * Ap
        rs_new = inner_product(r, r)
        p = r + (rs_new / rs) * p
        rs = rs_new
    if np.sqrt(rs) <= target:
        return x
    raise SolverDivergedError("conjugate gradients did not converge", float(np.sqrt(rs)))


def solve_london(f: Cochain, method: str = "spectral") -> Cochain:
    """Solve (-Delta + I) v = f.  Unique, no compatibility condition."""
    if method == "spectral":
        lam = stencil_eigenvalues(f.geom)
        return _spectral_multiply(f, 1.0 / (1.0 + lam))
    if method == "cg":
        return _cg_solve(
            lambda p: -1.0 * laplacian(p) + p,
            f,
            tol=1e-12,
            max_iter=10 * f.geom.n_sites,
        )
    raise ValueError(f"unknown method {method!r}")


def solve_poisson(f: Cochain, method: str = "spectral") -> Cochain:
    """Solve -Delta v = f with H(v) = 0; requires a mean-free source."""
    h_norm = norm(harmonic_projection(f))
    if h_norm > 1e-10 * max(norm(f), 1e-300):
        raise NonCompatibleSourceError(
            f"source has harmonic part of norm {h_norm:.3e}; "
            "solve_poisson needs H(f) = 0"
        )
    if method == "spectral":
        lam = stencil_eigenvalues(f.geom)
        mult = np.zeros_like(lam)
        nonzero = lam > 0.0
        mult[nonzero] = 1.0 / lam[nonzero]
        return _spectral_multiply(f, mult)
    if method == "cg":
        mean_free = f - harmonic_projection(f)
        sol = _cg_solve(
            lambda p: -1.0 * laplacian(p),
            mean_free,
            tol=1e-12,
            max_iter=10 * f.geom.n_sites,
        )
        return sol - harmonic_projection(sol)
    raise ValueError(f"unknown method {method!r}")
