"""State estimators driven by the measurement record.

Three estimation layers, in decreasing order of fidelity and cost:

1. full observer: the matrix-valued filter that knows both the record Y
   and the control noise B, propagated with the same splitting as the
   plant (Euler-Maruyama measurement update with the innovation in place
   of dW, then exact conjugation by the control rotation);
2. reduced filter: a matrix-valued filter that discards knowledge of B;
   the control channel enters only through its average effect, the
   sigma^2 D_H drift, so the whole step is plain Euler-Maruyama;
3. population filter: a d-dimensional vector filter for the eigenspace
   populations only, whose actuation term is the Laplacian matrix
   Delta_{k,k'} = tr(Pi_k D_H(Pi_{k'})).

The population filter is exact in open loop (gain identically zero) and
is the cheapest usable estimator for the feedback law, since the gain
depends on the state only through the populations.
"""

from __future__ import annotations

import numpy as np

from .core import (
    SpectralDecomposition,
    dissipator,
    innovation_superop,
    populations,
    project_to_physical,
)
from .dynamics import ControlSetup, MeasurementSetup, _conjugate_active, feedback_gain

__all__ = [
    "laplacian_matrix",
    "graph_connected",
    "full_observer_step",
    "reduced_filter_step",
    "population_filter_step",
]


def laplacian_matrix(H: np.ndarray, dec: SpectralDecomposition) -> np.ndarray:
    """Actuation Laplacian Delta_{k,k'} = tr(Pi_k D_H(Pi_{k'})) on the eigenspace index set.

    Off-diagonal entries equal tr(Pi_k H Pi_{k'} H) >= 0; diagonal entries
    are the negated row sums, so rows (and by symmetry columns) sum to zero
    exactly as floating-point sums.
    """
    H = np.asarray(H, dtype=complex)
    if H.shape[-1] != dec.n:
        raise ValueError(f"H dim {H.shape[-1]} does not match decomposition dim {dec.n}")
    ph = dec.projectors @ H
    off = np.einsum("kij,lji->kl", ph, ph).real
    off = 0.5 * (off + off.T)
    np.fill_diagonal(off, 0.0)
    # exact zeros can round to tiny negatives; the true off-diagonals are
    # trace inner products tr(B^dag B) and cannot be negative
    off[off < 0] = 0.0
    delta = off.copy()
    np.fill_diagonal(delta, -np.sum(off, axis=1))
    return delta


def graph_connected(delta: np.ndarray, connectivity_tolerance: float = 1e-10) -> bool:
    """True iff the graph with edges {Delta_{k,k'} > tol, k != k'} is connected."""
    delta = np.asarray(delta)
    d = delta.shape[-1]
    if d == 1:
        return True
    adjacency = delta > connectivity_tolerance
    np.fill_diagonal(adjacency, False)
    seen = np.zeros(d, dtype=bool)
    stack = [0]
    seen[0] = True
    while stack:
        k = stack.pop()
        for k2 in np.flatnonzero(adjacency[k]):
            if not seen[k2]:
                seen[k2] = True
                stack.append(int(k2))
    return bool(seen.all())


def full_observer_step(
    rho_hat: np.ndarray,
    meas: MeasurementSetup,
    ctrl: ControlSetup,
    dY,
    dB,
    dt: float,
) -> np.ndarray:
    """Observer step with full knowledge of the record Y and the control noise B.

    The innovation dY - 2 sqrt(eta) tr(L rho_hat) dt replaces dW in the
    measurement update; the control rotation exp(-i H sigma(rho_hat) dB)
    is applied exactly, mirroring the plant splitting, so an observer
    started at the true state with shared noise reproduces the plant
    trajectory exactly.
    """
    dY = np.asarray(dY, dtype=float)
    sqeta = np.sqrt(meas.eta)
    sigma = feedback_gain(populations(rho_hat, meas.dec), ctrl)
    ex = np.einsum("ij,...ji->...", meas.L, rho_hat).real
    innovation = dY - 2.0 * sqeta * ex * dt
    moved = (
        rho_hat
        + dissipator(meas.L, rho_hat) * dt
        + sqeta * innovation_superop(meas.L, rho_hat) * innovation[..., None, None]
    )
    moved = _conjugate_active(moved, ctrl.H, sigma * np.asarray(dB, dtype=float))
    return project_to_physical(moved)


def reduced_filter_step(
    rho_hat: np.ndarray,
    meas: MeasurementSetup,
    ctrl: ControlSetup,
    dY,
    dt: float,
) -> np.ndarray:
    """Filter step that discards knowledge of B: Euler-Maruyama with the sigma^2 D_H drift."""
    dY = np.asarray(dY, dtype=float)
    sqeta = np.sqrt(meas.eta)
    sigma = np.asarray(feedback_gain(populations(rho_hat, meas.dec), ctrl))
    ex = np.einsum("ij,...ji->...", meas.L, rho_hat).real
    innovation = dY - 2.0 * sqeta * ex * dt
    moved = (
        rho_hat
        + (dissipator(meas.L, rho_hat) + (sigma * sigma)[..., None, None] * dissipator(ctrl.H, rho_hat)) * dt
        + sqeta * innovation_superop(meas.L, rho_hat) * innovation[..., None, None]
    )
    return project_to_physical(moved)


def population_filter_step(
    p_hat: np.ndarray,
    meas: MeasurementSetup,
    ctrl: ControlSetup,
    delta: np.ndarray,
    dY,
    dt: float,
) -> np.ndarray:
    """d-dimensional population filter step.

    dp_k = 2 sqrt(eta) p_k (lambda_k - w) (dY - 2 sqrt(eta) w dt)
           + sigma(p)^2 sum_k' Delta_{k,k'} p_k' dt,   w = sum_k lambda_k p_k,

    followed by a clamp of negative components to zero and renormalization
    of the sum to one (Euler steps can leave the simplex for large noise
    increments; the continuous flow preserves it).
    """
    p_hat = np.asarray(p_hat, dtype=float)
    dY = np.asarray(dY, dtype=float)
    lam = meas.dec.eigenvalues
    sqeta = np.sqrt(meas.eta)
    sigma = np.asarray(feedback_gain(p_hat, ctrl))
    w = p_hat @ lam
    innovation = dY - 2.0 * sqeta * w * dt
    dp = (
        2.0 * sqeta * p_hat * (lam - w[..., None]) * innovation[..., None]
        + (sigma * sigma)[..., None] * (p_hat @ delta.T) * dt
    )
    out = np.clip(p_hat + dp, 0.0, None)
    return out / np.sum(out, axis=-1, keepdims=True)
