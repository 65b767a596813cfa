"""Density-matrix primitives for diffusive quantum measurement models.

States are complex ndarrays of shape (n, n), or batches with arbitrary
leading axes, shape (..., n, n).  Every operation here broadcasts over the
leading axes, so trajectory ensembles can be pushed through as a single
array.  The measurement operator is Hermitian throughout; its spectral
decomposition (distinct eigenvalues, descending, with orthogonal
projectors) is the object the rest of the package consumes, because the
eigenspace populations are what the feedback laws act on.

Conventions: all tolerances are absolute unless stated otherwise, and all
random sampling takes an explicit numpy Generator so callers own seeding.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "UnrecoverableStateError",
    "SpectralDecomposition",
    "hermitian_part",
    "trace",
    "validate_hermitian",
    "validate_density_matrix",
    "spectral_decomposition",
    "populations",
    "dissipator",
    "innovation_superop",
    "unitary_conjugate",
    "project_to_physical",
    "random_density_matrix",
    "random_hermitian",
    "random_simplex",
]


class UnrecoverableStateError(RuntimeError):
    """A numerical state lost essentially all of its trace and cannot be repaired."""


def hermitian_part(m: np.ndarray) -> np.ndarray:
    """(M + M^dag)/2, broadcasting over leading axes."""
    return 0.5 * (m + np.conj(np.swapaxes(m, -1, -2)))


def trace(m: np.ndarray) -> np.ndarray:
    """Matrix trace over the last two axes."""
    return np.einsum("...ii->...", m)


def _require_square(m: np.ndarray, name: str) -> np.ndarray:
    m = np.asarray(m)
    if m.ndim < 2 or m.shape[-1] != m.shape[-2]:
        raise ValueError(f"{name} must be a square matrix, got shape {m.shape}")
    return m


def validate_hermitian(op: np.ndarray, tol: float = 1e-12, name: str = "operator") -> np.ndarray:
    """Check Hermiticity entrywise within tol; returns the input on success."""
    op = _require_square(op, name)
    dev = float(np.max(np.abs(op - np.conj(np.swapaxes(op, -1, -2)))))
    if dev > tol:
        raise ValueError(
            f"{name} is not Hermitian: max |M - M^dag| = {dev:.3e} exceeds {tol:.3e}"
        )
    return op


def validate_density_matrix(rho: np.ndarray, tol: float = 1e-9, name: str = "rho") -> np.ndarray:
    """Check Hermiticity, unit trace and positivity (smallest eigenvalue >= -tol)."""
    rho = _require_square(rho, name)
    herm_dev = float(np.max(np.abs(rho - np.conj(np.swapaxes(rho, -1, -2)))))
    if herm_dev > tol:
        raise ValueError(f"{name} is not Hermitian within {tol:.1e}: deviation {herm_dev:.3e}")
    tr_dev = float(np.max(np.abs(trace(rho) - 1.0)))
    if tr_dev > tol:
        raise ValueError(f"{name} does not have unit trace within {tol:.1e}: deviation {tr_dev:.3e}")
    wmin = float(np.min(np.linalg.eigvalsh(hermitian_part(rho))))
    if wmin < -tol:
        raise ValueError(f"{name} is not positive semidefinite: min eigenvalue {wmin:.3e} < -{tol:.1e}")
    return rho


@dataclass(frozen=True)
class SpectralDecomposition:
    """Distinct eigenvalues (descending) and spectral projectors of a Hermitian operator.

    eigenvalues: (d,) real, strictly decreasing.
    projectors: (d, n, n) complex, Hermitian, idempotent, mutually orthogonal,
        resolving the identity.
    multiplicities: (d,) int, eigenspace dimensions, summing to n.
    """

    eigenvalues: np.ndarray
    projectors: np.ndarray
    multiplicities: np.ndarray

    @property
    def d(self) -> int:
        return len(self.eigenvalues)

    @property
    def n(self) -> int:
        return self.projectors.shape[-1]


def spectral_decomposition(op: np.ndarray, degeneracy_tolerance: float = 1e-8) -> SpectralDecomposition:
    """Group the spectrum of a Hermitian operator into distinct eigenspaces.

    Eigenvalues closer than degeneracy_tolerance (chained by consecutive
    gaps) are merged into a single eigenspace; the reported eigenvalue of a
    group is the group mean.  Output ordering is descending.
    """
    op = validate_hermitian(op, name="measurement operator")
    if op.ndim != 2:
        raise ValueError("spectral_decomposition takes a single matrix, not a batch")
    w, v = np.linalg.eigh(op)
    n = len(w)
    # cluster ascending eigenvalues by consecutive gaps
    boundaries = [0]
    for i in range(1, n):
        if w[i] - w[i - 1] > degeneracy_tolerance:
            boundaries.append(i)
    boundaries.append(n)
    eigenvalues = []
    projectors = []
    multiplicities = []
    for a, b in zip(boundaries[:-1], boundaries[1:]):
        block = v[:, a:b]
        proj = block @ np.conj(block.T)
        eigenvalues.append(float(np.mean(w[a:b])))
        projectors.append(hermitian_part(proj))
        multiplicities.append(b - a)
    # descending order to match the eigenvalue-indexing convention
    eigenvalues = np.asarray(eigenvalues[::-1], dtype=float)
    projectors = np.asarray(projectors[::-1], dtype=complex)
    multiplicities = np.asarray(multiplicities[::-1], dtype=int)
    return SpectralDecomposition(eigenvalues, projectors, multiplicities)


def populations(rho: np.ndarray, dec: SpectralDecomposition) -> np.ndarray:
    """Eigenspace populations p_k = tr(rho Pi_k), shape (..., d), clipped to [0, 1]."""
    rho = np.asarray(rho)
    if rho.shape[-1] != dec.n:
        raise ValueError(f"state dim {rho.shape[-1]} does not match decomposition dim {dec.n}")
    p = np.einsum("...ij,kji->...k", rho, dec.projectors).real
    return np.clip(p, 0.0, 1.0)


def dissipator(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """D_A(rho) = A rho A^dag - (A^dag A rho + rho A^dag A)/2."""
    op = _require_square(op, "operator")
    ad = np.conj(np.swapaxes(op, -1, -2))
    ada = ad @ op
    return op @ rho @ ad - 0.5 * (ada @ rho + rho @ ada)


def innovation_superop(op: np.ndarray, rho: np.ndarray) -> np.ndarray:
    """Measurement backaction M_L(rho) = L rho + rho L^dag - tr((L + L^dag) rho) rho."""
    op = _require_square(op, "operator")
    ad = np.conj(np.swapaxes(op, -1, -2))
    ex = np.einsum("...ij,...ji->...", (op + ad), rho).real
    return op @ rho + rho @ ad - ex[..., None, None] * rho


def unitary_conjugate(h: np.ndarray, x, rho: np.ndarray) -> np.ndarray:
    """exp(-i H x) rho exp(i H x), exact via the eigendecomposition of H.

    x may be a scalar or an array broadcastable against the leading axes of
    rho, so a batch of states can be rotated by per-state angles.
    """
    h = validate_hermitian(h, name="control Hamiltonian")
    w, v = np.linalg.eigh(h)
    x = np.asarray(x, dtype=float)
    phase = np.exp(-1j * x[..., None] * w)
    t = np.conj(v.T) @ rho @ v
    t = phase[..., :, None] * t * np.conj(phase)[..., None, :]
    return v @ t @ np.conj(v.T)


def project_to_physical(m: np.ndarray, trace_floor: float = 1e-12) -> np.ndarray:
    """Repair a numerically drifted state: hermitize, clip negative eigenvalues, renormalize.

    Raises UnrecoverableStateError when the clipped trace is <= trace_floor,
    i.e. the matrix retains no usable positive part.  Idempotent on valid
    states up to 1e-12.
    """
    m = _require_square(np.asarray(m, dtype=complex), "state")
    sym = hermitian_part(m)
    w, v = np.linalg.eigh(sym)
    w = np.clip(w, 0.0, None)
    tr = np.sum(w, axis=-1)
    if np.any(tr <= trace_floor):
        bad = np.argwhere(np.atleast_1d(tr) <= trace_floor).ravel()
        raise UnrecoverableStateError(
            f"state trace after clipping <= {trace_floor:.1e} at batch indices {bad.tolist()}"
        )
    w = w / tr[..., None]
    out = (v * w[..., None, :]) @ np.conj(np.swapaxes(v, -1, -2))
    return hermitian_part(out)


def random_density_matrix(n: int, rng: np.random.Generator, rank: int | None = None) -> np.ndarray:
    """Hilbert-Schmidt random state from a complex Ginibre factor of given rank."""
    if rank is None:
        rank = n
    g = rng.standard_normal((n, rank)) + 1j * rng.standard_normal((n, rank))
    m = g @ np.conj(g.T)
    return m / np.real(np.trace(m))


def random_hermitian(n: int, rng: np.random.Generator, scale: float = 1.0) -> np.ndarray:
    """GUE-style random Hermitian matrix with entries of order scale."""
    a = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
    return scale * hermitian_part(a)


def random_simplex(d: int, rng: np.random.Generator) -> np.ndarray:
    """Uniform (Dirichlet(1,...,1)) sample from the probability simplex."""
    return rng.dirichlet(np.ones(d))
