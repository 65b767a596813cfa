"""Seeded Monte Carlo campaigns, feedback delay, rate fitting, CSV reports.

The integrator here is a vectorized implementation of the same splitting
scheme as the public one-step functions (Euler-Maruyama measurement
update, exact control conjugation, physicality projection), specialized
to measurement operators that are diagonal in the working basis so the
measurement superoperators reduce to elementwise array products.  A batch
of trajectories is advanced in lockstep; the only per-trajectory work is
noise generation.

Reproducibility contract: every trajectory owns two counter-based noise
streams (Philox) keyed by (base_seed, 4*index) for the measurement noise
W and (base_seed, 4*index + 1) for the control noise B.  Batching, worker
count and recording stride therefore never change the bits of any
trajectory, and ensembles aggregate in index order.

The physicality projection is applied after every step.  To keep its cost
off the hot path it screens states with a shifted batched Cholesky
factorization (success of chol(rho + 1e-12 I) certifies the smallest
eigenvalue is above -1e-12) and runs the eigenvalue clip only on the rows
that fail the screen.  The screened projection agrees with the public
project_to_physical within 1e-12 by construction.
"""

from __future__ import annotations

import csv
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from .core import UnrecoverableStateError
from .dynamics import ControlSetup, MeasurementSetup, feedback_gain
from .filters import laplacian_matrix
from .lyapunov import v_open
from .spin import spin2_preset

__all__ = [
    "DEFAULT_SEED",
    "ESTIMATORS",
    "CampaignConfig",
    "TrajectoryTrace",
    "EnsembleResult",
    "CampaignError",
    "FitDomainError",
    "DelayedGainBuffer",
    "noise_generator",
    "run_trajectory",
    "run_ensemble",
    "estimate_rate",
    "write_series_csv",
    "write_summary_csv",
    "read_series_csv",
    "read_summary_csv",
]

DEFAULT_SEED = 20260814
ESTIMATORS = ("truth", "full_observer", "reduced_filter", "population_filter")

# Fixed batching constants. These are part of the reproducibility contract:
# results must not depend on worker count, so the trajectory-to-chunk
# assignment is a pure function of the trajectory index.
CHUNK = 1000
NOISE_BLOCK = 2048

_PSD_SHIFT = 1e-12
_TRACE_FLOOR = 1e-12


class CampaignError(RuntimeError):
    """Campaign-level failure (too many aborted trajectories)."""


class FitDomainError(ValueError):
    """Rate fit requested on a window containing nonpositive values."""


@dataclass(frozen=True)
class CampaignConfig:
    """Full description of one simulation campaign.

    p_max defaults to p_min + 0.05 and sigma_bar to sqrt((2J+1) eta) when
    left as None.  fit_window is in time units and must lie inside
    [0, t_final].  feedback_delay is a zero-order hold on the gain signal
    sigma and must be an integer multiple of dt; the gain is zero for
    t < feedback_delay (open-loop warm start).  initial selects the shared
    starting state: "mixed" is the maximally mixed state I/n, "target" the
    target eigenstate (plant and estimator always start at the same state).
    """

    p_min: float
    t_final: float
    estimator: str = "truth"
    model: str = "spin"
    J: float = 2.0
    eta: float = 0.8
    p_max: float | None = None
    sigma_bar: float | None = None
    saturation: str = "piecewise_linear"
    trajectories: int = 1000
    dt: float = 1e-3
    record_stride: int = 100
    feedback_delay: float = 0.0
    base_seed: int = DEFAULT_SEED
    fit_window: tuple[float, float] = (5.0, 25.0)
    initial: str = "mixed"
    workers: int = 1

    def __post_init__(self):
        if self.model != "spin":
            raise ValueError(f"unknown model {self.model!r}; only 'spin' is available")
        if self.estimator not in ESTIMATORS:
            raise ValueError(f"estimator must be one of {ESTIMATORS}, got {self.estimator!r}")
        if self.trajectories < 1:
            raise ValueError("trajectories must be >= 1")
        if self.t_final <= 0 or self.dt <= 0:
            raise ValueError("t_final and dt must be positive")
        if self.record_stride < 1:
            raise ValueError("record_stride must be >= 1")
        steps = self.t_final / self.dt
        if abs(steps - round(steps)) > 1e-6:
            raise ValueError(f"t_final must be an integer multiple of dt, got {steps} steps")
        if round(steps) % self.record_stride != 0:
            raise ValueError("step count t_final/dt must be a multiple of record_stride")
        if self.feedback_delay < 0:
            raise ValueError("feedback_delay must be >= 0")
        lag = self.feedback_delay / self.dt
        if abs(lag - round(lag)) > 1e-6:
            raise ValueError("feedback_delay must be an integer multiple of dt")
        w0, w1 = self.fit_window
        if not (0.0 <= w0 < w1 <= self.t_final):
            raise ValueError(f"fit_window must satisfy 0 <= start < end <= t_final, got {self.fit_window}")
        if self.initial not in ("mixed", "target"):
            raise ValueError(f"initial must be 'mixed' or 'target', got {self.initial!r}")
        if self.workers < 1:
            raise ValueError("workers must be >= 1")

    @property
    def n_steps(self) -> int:
        return int(round(self.t_final / self.dt))

    @property
    def delay_steps(self) -> int:
        return int(round(self.feedback_delay / self.dt))


def resolve_setups(cfg: CampaignConfig) -> tuple[MeasurementSetup, ControlSetup]:
    """Build the (measurement, control) pair a config describes."""
    return spin2_preset(
        p_min=cfg.p_min,
        sigma_bar=cfg.sigma_bar,
        eta=cfg.eta,
        J=cfg.J,
        p_max=cfg.p_max,
        saturation=cfg.saturation,
    )


def noise_generator(base_seed: int, index: int, stream: int) -> np.random.Generator:
    """Counter-based generator for one trajectory's noise stream (0 = W, 1 = B)."""
    key = [np.uint64(base_seed), np.uint64(4 * index + stream)]
    return np.random.Generator(np.random.Philox(key=key))


class DelayedGainBuffer:
    """Zero-order-hold ring buffer: push sigma(t), receive sigma(t - delay).

    Pre-history is zero, so the loop runs open loop for the first delay
    interval.  delay = 0 degenerates to a pass-through.
    """

    def __init__(self, delay: float, dt: float, width: int = 1):
        lag = delay / dt
        if abs(lag - round(lag)) > 1e-6:
            raise ValueError("delay must be an integer multiple of dt")
        self.steps = int(round(lag))
        self._buf = np.zeros((self.steps, width)) if self.steps else None
        self._ptr = 0

    def push(self, sigma: np.ndarray) -> np.ndarray:
        sigma = np.atleast_1d(np.asarray(sigma, dtype=float))
        if self.steps == 0:
            return sigma
        out = self._buf[self._ptr].copy()
        self._buf[self._ptr] = sigma
        self._ptr = (self._ptr + 1) % self.steps
        return out


def _cholesky_screen(mat: np.ndarray, shift: float = _PSD_SHIFT) -> np.ndarray:
    """True per batch row iff mat + shift*I admits a Cholesky factorization.

    Success certifies the smallest eigenvalue of the (Hermitian) row is
    >= -shift up to factorization rounding; failure sends the row to the
    exact eigenvalue clip.
    """
    m, n = mat.shape[0], mat.shape[-1]
    ok = np.ones(m, dtype=bool)
    low = np.zeros_like(mat)
    for k in range(n):
        pivot = mat[:, k, k].real + shift - np.einsum("mj,mj->m", low[:, k, :k], low[:, k, :k].conj()).real
        ok &= pivot > 0.0
        root = np.sqrt(np.where(pivot > 0.0, pivot, 1.0))
        low[:, k, k] = root
        if k + 1 < n:
            cross = np.einsum("mij,mj->mi", low[:, k + 1 :, :k], low[:, k, :k].conj())
            low[:, k + 1 :, k] = (mat[:, k + 1 :, k] - cross) / root[:, None]
    return ok


def _project_batch(rho: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Screened physicality projection; returns (states, newly_dead_mask).

    Rows whose clipped trace falls below the floor are reported dead and
    replaced by the maximally mixed state as an inert placeholder (the
    caller stops recording them).
    """
    m, n = rho.shape[0], rho.shape[-1]
    sym = 0.5 * (rho + np.conj(np.swapaxes(rho, -1, -2)))
    tr = np.einsum("mii->m", sym).real
    dead = np.zeros(m, dtype=bool)
    good = tr > _TRACE_FLOOR
    out = np.empty_like(sym)
    out[good] = sym[good] / tr[good, None, None]
    suspect = ~good
    screened = np.zeros(m, dtype=bool)
    screened[good] = ~_cholesky_screen(out[good])
    suspect |= screened
    idx = np.flatnonzero(suspect)
    if idx.size:
        w, v = np.linalg.eigh(sym[idx])
        w = np.clip(w, 0.0, None)
        total = np.sum(w, axis=-1)
        bad = total <= _TRACE_FLOOR
        total = np.where(bad, 1.0, total)
        w = w / total[:, None]
        rec = (v * w[:, None, :]) @ np.conj(np.swapaxes(v, -1, -2))
        rec = 0.5 * (rec + np.conj(np.swapaxes(rec, -1, -2)))
        rec[bad] = np.eye(n) / n
        out[idx] = rec
        dead[idx[bad]] = True
    return out, dead


@dataclass(frozen=True)
class TrajectoryTrace:
    """Strided record of one trajectory."""

    times: np.ndarray
    error: np.ndarray
    v_open: np.ndarray
    final_populations: np.ndarray


@dataclass(frozen=True)
class EnsembleResult:
    """Aggregated campaign output; per-trajectory traces retained for bootstrap fits."""

    cfg: CampaignConfig
    times: np.ndarray
    mean_error: np.ndarray
    q10: np.ndarray
    q50: np.ndarray
    q90: np.ndarray
    n_alive: np.ndarray
    mean_v_open: np.ndarray
    error_traces: np.ndarray
    v_open_traces: np.ndarray
    final_populations: np.ndarray
    aborted: tuple[tuple[int, int], ...]
    fitted_rate: float
    fit_ci: tuple[float, float]


def _integrate_chunk(cfg: CampaignConfig, start: int, stop: int):
    """Advance trajectories start..stop-1 in lockstep; see module docstring."""
    meas, ctrl = resolve_setups(cfg)
    dec = meas.dec
    n, d = dec.n, dec.d
    lvec = np.diagonal(meas.L).real
    if np.max(np.abs(meas.L - np.diag(lvec))) != 0.0:
        raise ValueError("campaign integrator requires a measurement operator diagonal in the working basis")
    # membership matrix: populations are index-group sums of the state diagonal
    members = (np.abs(lvec[None, :] - dec.eigenvalues[:, None]) < 1e-8).astype(float)
    lam = dec.eigenvalues
    target = ctrl.target
    eta, dt = meas.eta, cfg.dt
    sqeta = np.sqrt(eta)
    kmat = -0.5 * (lvec[:, None] - lvec[None, :]) ** 2 * dt
    smat = lvec[:, None] + lvec[None, :]
    hw, hv = np.linalg.eigh(ctrl.H)
    hvd = np.conj(hv.T)
    need_b = ctrl.sigma_bar > 0.0
    estimator = cfg.estimator

    m = stop - start
    if cfg.initial == "target":
        rho0 = dec.projectors[target].astype(complex) / dec.multiplicities[target]
        p0 = np.zeros(d)
        p0[target] = 1.0
    else:
        rho0 = np.eye(n, dtype=complex) / n
        p0 = np.full(d, 1.0 / d)
    rho = np.broadcast_to(rho0, (m, n, n)).copy()
    rho_hat = rho.copy() if estimator in ("full_observer", "reduced_filter") else None
    p_hat = np.broadcast_to(p0, (m, d)).copy() if estimator == "population_filter" else None
    if estimator == "population_filter":
        delta = laplacian_matrix(ctrl.H, dec)
    if estimator == "reduced_filter":
        h2 = ctrl.H @ ctrl.H
    buffer = DelayedGainBuffer(cfg.feedback_delay, dt, width=m)
    gens_w = [noise_generator(cfg.base_seed, i, 0) for i in range(start, stop)]
    gens_b = [noise_generator(cfg.base_seed, i, 1) for i in range(start, stop)] if need_b else None

    n_steps = cfg.n_steps
    stride = cfg.record_stride
    n_rec = n_steps // stride + 1
    err = np.full((m, n_rec), np.nan)
    vop = np.full((m, n_rec), np.nan)
    alive = np.ones(m, dtype=bool)
    aborted: list[tuple[int, int]] = []
    sqdt = np.sqrt(dt)

    def _record(slot: int, p: np.ndarray):
        e = np.sqrt(np.clip(1.0 - p[:, target], 0.0, 1.0))
        err[alive, slot] = e[alive]
        vop[alive, slot] = v_open(p)[alive]

    # reductions over the state index use einsum, not 2D matmul: BLAS gemm
    # results depend on the batch width at the last ulp, which would break
    # the bit-identity of a trajectory across chunk layouts
    diag = np.einsum("mii->mi", rho).real
    p_true = np.einsum("mi,ki->mk", diag, members)
    _record(0, p_true)

    def _conjugate_rows(states: np.ndarray, dv: np.ndarray) -> None:
        active = np.flatnonzero(dv)
        if active.size == 0:
            return
        sub = hvd @ states[active] @ hv
        phase = np.exp(-1j * dv[active, None] * hw)
        sub *= phase[:, :, None] * np.conj(phase)[:, None, :]
        states[active] = hv @ sub @ hvd

    step = 0
    while step < n_steps:
        blen = min(NOISE_BLOCK, n_steps - step)
        dw_block = np.empty((m, blen))
        for i, g in enumerate(gens_w):
            dw_block[i] = g.standard_normal(blen)
        dw_block *= sqdt
        if need_b:
            db_block = np.empty((m, blen))
            for i, g in enumerate(gens_b):
                db_block[i] = g.standard_normal(blen)
            db_block *= sqdt
        for j in range(blen):
            dw = dw_block[:, j]
            diag = np.einsum("mii->mi", rho).real
            p_true = np.einsum("mi,ki->mk", diag, members)
            if estimator == "truth":
                p_est = p_true
            elif estimator == "population_filter":
                p_est = p_hat
            else:
                p_est = np.einsum("mi,ki->mk", np.einsum("mii->mi", rho_hat).real, members)
            sigma_sig = np.asarray(feedback_gain(p_est, ctrl))
            sigma_app = buffer.push(sigma_sig)
            dv = sigma_app * db_block[:, j] if need_b else np.zeros(m)

            exp_l = np.einsum("mi,i->m", diag, lvec)
            factor = 1.0 + kmat + sqeta * (smat - 2.0 * exp_l[:, None, None]) * dw[:, None, None]
            dy = 2.0 * sqeta * exp_l * dt + dw
            rho = rho * factor
            _conjugate_rows(rho, dv)
            rho, newly_dead = _project_batch(rho)
            if newly_dead.any():
                for i in np.flatnonzero(newly_dead & alive):
                    aborted.append((start + int(i), step + 1))
                alive &= ~newly_dead

            if estimator == "full_observer":
                diag_h = np.einsum("mii->mi", rho_hat).real
                exp_h = np.einsum("mi,i->m", diag_h, lvec)
                innov = dy - 2.0 * sqeta * exp_h * dt
                hfac = 1.0 + kmat + sqeta * (smat - 2.0 * exp_h[:, None, None]) * innov[:, None, None]
                rho_hat = rho_hat * hfac
                _conjugate_rows(rho_hat, dv)
                rho_hat, _ = _project_batch(rho_hat)
            elif estimator == "reduced_filter":
                diag_h = np.einsum("mii->mi", rho_hat).real
                exp_h = np.einsum("mi,i->m", diag_h, lvec)
                innov = dy - 2.0 * sqeta * exp_h * dt
                hfac = 1.0 + kmat + sqeta * (smat - 2.0 * exp_h[:, None, None]) * innov[:, None, None]
                dh = ctrl.H @ rho_hat @ ctrl.H - 0.5 * (h2 @ rho_hat + rho_hat @ h2)
                rho_hat = rho_hat * hfac + (sigma_app * sigma_app)[:, None, None] * dh * dt
                rho_hat, _ = _project_batch(rho_hat)
            elif estimator == "population_filter":
                varpi = np.einsum("mi,i->m", p_hat, lam)
                innov = dy - 2.0 * sqeta * varpi * dt
                p_new = p_hat + 2.0 * sqeta * p_hat * (lam - varpi[:, None]) * innov[:, None]
                p_new += (sigma_app * sigma_app)[:, None] * np.einsum("mi,ki->mk", p_hat, delta) * dt
                p_new = np.clip(p_new, 0.0, None)
                p_hat = p_new / np.sum(p_new, axis=-1, keepdims=True)

            step += 1
            if step % stride == 0:
                diag = np.einsum("mii->mi", rho).real
                _record(step // stride, np.einsum("mi,ki->mk", diag, members))

    diag = np.einsum("mii->mi", rho).real
    final_p = np.einsum("mi,ki->mk", diag, members)
    final_p[~alive] = np.nan
    return err, vop, final_p, aborted


def _chunk_task(args):
    cfg, start, stop = args
    return _integrate_chunk(cfg, start, stop)


def run_trajectory(cfg: CampaignConfig, index: int) -> TrajectoryTrace:
    """Integrate a single trajectory, bit-identical to its appearance in any ensemble.

    The noise keys depend on the global trajectory index, not on the chunk
    layout, so a width-1 integration reproduces the ensemble member exactly.
    """
    if not 0 <= index < cfg.trajectories:
        raise ValueError(f"trajectory index {index} outside 0..{cfg.trajectories - 1}")
    err, vop, final_p, aborted = _integrate_chunk(cfg, index, index + 1)
    if aborted:
        raise UnrecoverableStateError(f"trajectory {index} aborted at step {aborted[0][1]}")
    times = np.arange(err.shape[-1]) * cfg.dt * cfg.record_stride
    return TrajectoryTrace(times=times, error=err[0], v_open=vop[0], final_populations=final_p[0])


def run_ensemble(cfg: CampaignConfig) -> EnsembleResult:
    """Run all trajectories of a campaign and aggregate statistics in index order."""
    bounds = [(s, min(s + CHUNK, cfg.trajectories)) for s in range(0, cfg.trajectories, CHUNK)]
    if cfg.workers > 1 and len(bounds) > 1:
        with ProcessPoolExecutor(max_workers=cfg.workers) as pool:
            parts = list(pool.map(_chunk_task, [(cfg, a, b) for a, b in bounds]))
    else:
        parts = [_integrate_chunk(cfg, a, b) for a, b in bounds]
    err = np.concatenate([p[0] for p in parts], axis=0)
    vop = np.concatenate([p[1] for p in parts], axis=0)
    final_p = np.concatenate([p[2] for p in parts], axis=0)
    aborted = tuple(ab for p in parts for ab in p[3])
    if len(aborted) > 0.01 * cfg.trajectories:
        raise CampaignError(
            f"{len(aborted)} of {cfg.trajectories} trajectories aborted with unrecoverable states"
        )
    times = np.arange(err.shape[1]) * cfg.dt * cfg.record_stride
    n_alive = np.sum(~np.isnan(err), axis=0)
    mean_error = np.nanmean(err, axis=0)
    q10, q50, q90 = np.nanpercentile(err, [10.0, 50.0, 90.0], axis=0)
    mean_v_open = np.nanmean(vop, axis=0)
    result = EnsembleResult(
        cfg=cfg,
        times=times,
        mean_error=mean_error,
        q10=q10,
        q50=q50,
        q90=q90,
        n_alive=n_alive,
        mean_v_open=mean_v_open,
        error_traces=err,
        v_open_traces=vop,
        final_populations=final_p,
        aborted=aborted,
        fitted_rate=np.nan,
        fit_ci=(np.nan, np.nan),
    )
    try:
        nu, ci = estimate_rate(result, window=cfg.fit_window)
    except FitDomainError:
        nu, ci = np.nan, (np.nan, np.nan)
    return replace(result, fitted_rate=nu, fit_ci=ci)


def _fit_slope(times: np.ndarray, values: np.ndarray) -> float:
    return float(np.polyfit(times, np.log(values), 1)[0])


def estimate_rate(
    result: EnsembleResult,
    window: tuple[float, float] | None = None,
    series: str = "error",
    resamples: int = 200,
) -> tuple[float, tuple[float, float]]:
    """Least-squares exponential rate of a mean series, with a bootstrap CI.

    Fits the slope of log(mean) over the window; the confidence interval
    resamples trajectories with replacement (200 resamples, percentile
    2.5/97.5).  series selects the stabilization error sqrt(1 - p_target)
    or the open-loop Lyapunov mean ("v_open").
    """
    if series == "error":
        mean, traces = result.mean_error, result.error_traces
    elif series == "v_open":
        mean, traces = result.mean_v_open, result.v_open_traces
    else:
        raise ValueError(f"series must be 'error' or 'v_open', got {series!r}")
    if window is None:
        window = result.cfg.fit_window
    w0, w1 = window
    mask = (result.times >= w0) & (result.times <= w1)
    if mask.sum() < 2:
        raise FitDomainError(f"fit window {window} selects fewer than two grid points")
    vals = mean[mask]
    if np.any(~np.isfinite(vals)) or np.any(vals <= 0.0):
        raise FitDomainError("mean series is nonpositive inside the fit window")
    nu_hat = -_fit_slope(result.times[mask], vals)
    sub = traces[:, mask]
    rng = np.random.Generator(np.random.Philox(key=[np.uint64(result.cfg.base_seed), np.uint64(2**62)]))
    n_traj = sub.shape[0]
    boot = np.empty(resamples)
    twin = result.times[mask]
    for r in range(resamples):
        pick = rng.integers(0, n_traj, size=n_traj)
        mboot = np.nanmean(sub[pick], axis=0)
        if np.any(~np.isfinite(mboot)) or np.any(mboot <= 0.0):
            boot[r] = np.nan
            continue
        boot[r] = -_fit_slope(twin, mboot)
    lo, hi = np.nanpercentile(boot, [2.5, 97.5])
    return float(nu_hat), (float(lo), float(hi))


def _fmt(x) -> str:
    return repr(float(x))


def write_series_csv(result: EnsembleResult, path: str) -> None:
    """Time series CSV: t, mean_error, q10, q50, q90, n_alive (full float precision)."""
    with open(path, "w", newline="") as fh:
        fh.write("t,mean_error,q10,q50,q90,n_alive\n")
        for i in range(len(result.times)):
            fh.write(
                f"{_fmt(result.times[i])},{_fmt(result.mean_error[i])},{_fmt(result.q10[i])},"
                f"{_fmt(result.q50[i])},{_fmt(result.q90[i])},{int(result.n_alive[i])}\n"
            )


SUMMARY_FIELDS = (
    "nu_hat",
    "ci_low",
    "ci_high",
    "trajectories",
    "aborted",
    "t_final",
    "dt",
    "record_stride",
    "p_min",
    "p_max",
    "sigma_bar",
    "eta",
    "estimator",
    "feedback_delay",
    "base_seed",
    "fit_t_start",
    "fit_t_end",
    "saturation",
    "J",
    "initial",
)


def write_summary_csv(result: EnsembleResult, path: str) -> None:
    """One-row campaign summary with the fitted rate, its CI, and the resolved parameters."""
    cfg = result.cfg
    meas, ctrl = resolve_setups(cfg)
    values = {
        "nu_hat": _fmt(result.fitted_rate),
        "ci_low": _fmt(result.fit_ci[0]),
        "ci_high": _fmt(result.fit_ci[1]),
        "trajectories": str(cfg.trajectories),
        "aborted": str(len(result.aborted)),
        "t_final": _fmt(cfg.t_final),
        "dt": _fmt(cfg.dt),
        "record_stride": str(cfg.record_stride),
        "p_min": _fmt(ctrl.p_min),
        "p_max": _fmt(ctrl.p_max),
        "sigma_bar": _fmt(ctrl.sigma_bar),
        "eta": _fmt(meas.eta),
        "estimator": cfg.estimator,
        "feedback_delay": _fmt(cfg.feedback_delay),
        "base_seed": str(cfg.base_seed),
        "fit_t_start": _fmt(cfg.fit_window[0]),
        "fit_t_end": _fmt(cfg.fit_window[1]),
        "saturation": cfg.saturation,
        "J": _fmt(cfg.J),
        "initial": cfg.initial,
    }
    with open(path, "w", newline="") as fh:
        fh.write(",".join(SUMMARY_FIELDS) + "\n")
        fh.write(",".join(values[k] for k in SUMMARY_FIELDS) + "\n")


def read_series_csv(path: str) -> dict[str, np.ndarray]:
    """Parse a series CSV back into arrays (exact float round trip)."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out: dict[str, np.ndarray] = {}
    for key in ("t", "mean_error", "q10", "q50", "q90"):
        out[key] = np.array([float(r[key]) for r in rows])
    out["n_alive"] = np.array([int(r["n_alive"]) for r in rows])
    return out


def read_summary_csv(path: str) -> dict[str, str]:
    """Parse a summary CSV into its single row of raw string fields."""
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    if len(rows) != 1:
        raise ValueError(f"summary CSV must contain exactly one row, found {len(rows)}")
    return dict(rows[0])
