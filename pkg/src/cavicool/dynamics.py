"""Stochastic dynamics of the coupled particle-field system.

The adiabatic semiclassical model is the Ito system

    dalpha = ({-[kappa + gamma0 cos^2 x] + i[delta_c - u0 cos^2 x]} alpha
              + eta_l - i eta_eff cos x) dt + dW_alpha
    dp     = (u0 |alpha|^2 sin 2x + 2 eta_eff Re(alpha) sin x) dt + dW_p
    dx     = 2 p dt                                  (m = 1/2, no noise on x)

integrated with Euler-Maruyama.  The Langevin inputs are white with the
state-dependent covariance (per unit time, over (xi_p, Re xi_a, Im xi_a))

    <xi_a* xi_a> = kappa + gamma0 cos^2 x           =: D_a
    <xi_p xi_a>  = -i gamma0 alpha sin x            =: C
    <xi_p xi_p>  = 2 gamma0 |alpha|^2 (cos^2 x ubar^2 + sin^2 x)

with equal quadrature variances D_a/2 and no Re/Im correlation (the
phase-symmetric vacuum choice).  Correlated increments are drawn through
a triangular factor of the covariance; matrices that are indefinite
beyond a small tolerance abort the run, smaller negative eigenvalues are
clipped to zero.

Everything here is vectorised over a batch of independent trajectories;
the scalar `step`/`evolve` entry points run a batch of size one.  Each
trajectory consumes its own Generator, reading normal deviates in blocks
of ``NOISE_CHUNK`` steps, so a trajectory's noise stream depends only on
its seed, never on how the batch is assembled.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .params import MASS, DerivedParams, SystemParams, force

NOISE_CHUNK = 1024       # steps of normals drawn per generator at a time
PSD_ABORT_REL = 1e-10    # eigenvalues below -tol*trace abort the run


class NoiseModelError(RuntimeError):
    """Noise covariance indefinite beyond the projection tolerance."""


class IntegrationError(RuntimeError):
    """Trajectory left the finite domain (NaN/Inf state)."""


@dataclass(frozen=True)
class State:
    """Phase-space point of one trajectory: position, momentum, field."""

    x: float
    p: float
    alpha: complex

    def __post_init__(self):
        vals = (self.x, self.p, self.alpha.real, self.alpha.imag)
        if not all(np.isfinite(v) for v in vals):
            raise ValueError(f"non-finite state: {vals}")


@dataclass(frozen=True)
class Derivative:
    """Time derivative of a State."""

    dx: float
    dp: float
    dalpha: complex


@dataclass(frozen=True)
class IntegratorConfig:
    """Time step, scheme and noise switches for the integrator."""

    dt: float = 5e-4
    scheme: str = "euler_maruyama"
    noise: bool = True
    seed: int = 0
    freeze_position: bool = False   # hold x fixed (diffusion / relaxation runs)

    def __post_init__(self):
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")
        if self.scheme != "euler_maruyama":
            raise ValueError(f"unknown scheme {self.scheme!r}")

    def check_stability(self, p: SystemParams, d: DerivedParams) -> float:
        """Stability guard dt*(kappa + gamma0 + |delta_c| + |u0|) < 1."""
        rate = p.kappa + d.gamma0 + abs(p.delta_c) + abs(d.u0)
        product = self.dt * rate
        if product >= 1.0:
            raise ValueError(
                f"dt = {self.dt} unstable: dt*(kappa+gamma0+|delta_c|+|u0|) "
                f"= {product:.3f} >= 1")
        if product > 0.5:
            warnings.warn(
                f"dt*(kappa+gamma0+|delta_c|+|u0|) = {product:.3f} > 0.5; "
                "integration may be inaccurate", stacklevel=2)
        return product


def drift(s: State, p: SystemParams, d: DerivedParams) -> Derivative:
    """Deterministic part of the equations of motion at state s."""
    c = np.cos(s.x)
    loss = p.kappa + d.gamma0 * c * c
    det = p.delta_c - d.u0 * c * c
    dalpha = (-loss + 1j * det) * s.alpha + p.eta_l - 1j * d.eta_eff * c
    return Derivative(dx=s.p / MASS, dp=force(s.x, s.alpha, d), dalpha=dalpha)


@dataclass(frozen=True)
class NoiseCovariance:
    """Symmetric 3x3 covariance over (xi_p, Re xi_a, Im xi_a), per unit time."""

    matrix: np.ndarray

    def factor(self) -> np.ndarray:
        """Square-root factor M with M M^T = PSD projection of the matrix.

        Eigenvalues below -PSD_ABORT_REL*trace raise NoiseModelError;
        smaller negative ones are clipped to zero, which also covers
        singular (e.g. all-zero) covariances that plain Cholesky rejects.
        """
        m = self.matrix
        vals, vecs = np.linalg.eigh(m)
        tol = PSD_ABORT_REL * max(np.trace(m), 0.0)
        if vals[0] < -max(tol, 1e-300):
            raise NoiseModelError(
                f"noise covariance indefinite: eigenvalues {vals}, matrix\n{m}")
        return vecs * np.sqrt(np.clip(vals, 0.0, None))


def noise_covariance(s: State, p: SystemParams, d: DerivedParams) -> NoiseCovariance:
    """Langevin covariance matrix at state s (see module docstring)."""
    c = np.cos(s.x)
    sn = np.sin(s.x)
    d_alpha = p.kappa + d.gamma0 * c * c
    cross = -1j * d.gamma0 * s.alpha * sn
    var_p = 2.0 * d.gamma0 * abs(s.alpha) ** 2 * (c * c * p.ubar_sq + sn * sn)
    m = np.array([
        [var_p,      cross.real,    cross.imag],
        [cross.real, d_alpha / 2.0, 0.0],
        [cross.imag, 0.0,           d_alpha / 2.0],
    ])
    return NoiseCovariance(matrix=m)


def sample_noise(c: NoiseCovariance, dt: float, rng: np.random.Generator):
    """One correlated Gaussian increment triple with covariance c.matrix*dt."""
    if dt <= 0.0:
        raise ValueError(f"dt must be > 0, got {dt}")
    z = rng.standard_normal(3)
    dw = (c.factor() @ z) * np.sqrt(dt)
    return dw[0], dw[1], dw[2]


# ---------------------------------------------------------------------------
# Batched Euler-Maruyama kernel
# ---------------------------------------------------------------------------

@dataclass
class BatchResult:
    """Raw output of a batch integration.

    samples[i, j] = (x, p, Re alpha, Im alpha) of trajectory i at sample j;
    rows of trajectories that went non-finite are NaN from the failure on
    and flagged dead in ``alive``.
    """

    sample_steps: np.ndarray   # (S,) step indices of the samples
    samples: np.ndarray        # (B, S, 4)
    x: np.ndarray              # final state arrays, (B,)
    p: np.ndarray
    alpha: np.ndarray          # complex (B,)
    alive: np.ndarray          # (B,) bool
    failed_step: np.ndarray    # (B,) int, -1 if never failed


@np.errstate(over="ignore", invalid="ignore")
def run_batch(x0, p0, alpha0, n_steps: int, cfg: IntegratorConfig,
              pr: SystemParams, d: DerivedParams,
              rngs, sample_stride: int = 0,
              on_nonfinite: str = "raise") -> BatchResult:
    """Integrate a batch of trajectories for n_steps Euler-Maruyama steps.

    ``rngs`` is one Generator per trajectory (ignored with noise off).
    ``sample_stride`` > 0 records the state every that many steps (step 0
    and the final step always included).  ``on_nonfinite`` is "raise"
    (abort with diagnostics) or "exclude" (flag the trajectory and
    continue with the rest).
    """
    if on_nonfinite not in ("raise", "exclude"):
        raise ValueError(f"bad on_nonfinite {on_nonfinite!r}")
    cfg.check_stability(pr, d)

    x = np.array(x0, dtype=float).copy()
    p = np.array(p0, dtype=float).copy()
    ar = np.array(np.real(alpha0), dtype=float).copy()
    ai = np.array(np.imag(alpha0), dtype=float).copy()
    nb = x.shape[0]
    dt = cfg.dt

    kappa, gamma0, u0 = pr.kappa, d.gamma0, d.u0
    eta_l, eta_eff, delta_c = pr.eta_l, d.eta_eff, pr.delta_c
    ubar_sq = pr.ubar_sq
    noise = cfg.noise
    move_x = not cfg.freeze_position

    if sample_stride > 0:
        steps = list(range(0, n_steps + 1, sample_stride))
        if steps[-1] != n_steps:
            steps.append(n_steps)
    else:
        steps = [0, n_steps] if n_steps > 0 else [0]
    sample_steps = np.array(steps, dtype=int)
    samples = np.full((nb, len(steps), 4), np.nan)
    next_sample = 0

    alive = np.ones(nb, dtype=bool)
    failed_step = np.full(nb, -1, dtype=int)

    def record(idx):
        samples[alive, idx, 0] = x[alive]
        samples[alive, idx, 1] = p[alive]
        samples[alive, idx, 2] = ar[alive]
        samples[alive, idx, 3] = ai[alive]

    if sample_steps[next_sample] == 0:
        record(next_sample)
        next_sample += 1

    step_i = 0
    while step_i < n_steps:
        chunk = min(NOISE_CHUNK, n_steps - step_i)
        if noise:
            z = np.empty((nb, chunk, 3))
            for i in range(nb):
                z[i] = rngs[i].standard_normal((chunk, 3))
        for j in range(chunk):
            cx = np.cos(x)
            sx = np.sin(x)
            c2 = cx * cx
            loss = kappa + gamma0 * c2
            det = delta_c - u0 * c2
            # drift of alpha (split into quadratures) and of p
            dar = -loss * ar - det * ai + eta_l
            dai = det * ar - loss * ai - eta_eff * cx
            asq = ar * ar + ai * ai
            fr = u0 * asq * 2.0 * sx * cx + 2.0 * eta_eff * ar * sx

            if noise:
                f = 0.5 * loss                       # per-quadrature field variance
                ca = gamma0 * sx * ai                # Re <xi_p xi_a>
                cb = -gamma0 * sx * ar               # Im <xi_p xi_a>
                var_p = 2.0 * gamma0 * asq * (c2 * ubar_sq + (1.0 - c2))
                r2 = ca * ca + cb * cb
                # f = 0 only with kappa = 0 at a node; the floor keeps the
                # division finite and the exact eigenvalue test below still
                # rejects covariances that are truly indefinite there.
                f_safe = np.maximum(f, 1e-300)
                schur = var_p - r2 / f_safe
                bad = schur < 0.0
                if bad.any():
                    trace = var_p + 2.0 * f
                    lam_min = 0.5 * (f + var_p) - np.sqrt(
                        0.25 * (f - var_p) ** 2 + r2)
                    if (lam_min < -PSD_ABORT_REL * trace).any():
                        k = int(np.argmin(lam_min + PSD_ABORT_REL * trace))
                        raise NoiseModelError(
                            f"noise covariance indefinite at step {step_i + j}: "
                            f"trajectory {k}, x={x[k]:.6g}, |alpha|^2={asq[k]:.6g}, "
                            f"min eigenvalue {lam_min[k]:.3e}")
                    schur = np.where(bad, 0.0, schur)
                sqf = np.sqrt(f * dt)
                z1 = z[:, j, 0]
                z2 = z[:, j, 1]
                z3 = z[:, j, 2]
                dw_re = sqf * z1
                dw_im = sqf * z2
                dw_p = ((ca * z1 + cb * z2) * (dt / np.maximum(sqf, 1e-300))
                        + np.sqrt(schur * dt) * z3)
                p_new = p + fr * dt + dw_p
                ar_new = ar + dar * dt + dw_re
                ai_new = ai + dai * dt + dw_im
            else:
                p_new = p + fr * dt
                ar_new = ar + dar * dt
                ai_new = ai + dai * dt

            if move_x:
                x = x + (dt / MASS) * p              # uses pre-update momentum
            p, ar, ai = p_new, ar_new, ai_new

            ok = np.isfinite(x + p + ar + ai)
            if not ok.all():
                newly = alive & ~ok
                if newly.any():
                    if on_nonfinite == "raise":
                        k = int(np.argmax(newly))
                        raise IntegrationError(
                            f"non-finite state at step {step_i + j + 1} "
                            f"(t={(step_i + j + 1) * dt:.6g}): trajectory {k}, "
                            f"x={x[k]!r}, p={p[k]!r}, alpha={ar[k]!r}+{ai[k]!r}j")
                    failed_step[newly] = step_i + j + 1
                    alive &= ok
                    # park dead lanes at zero so arithmetic stays finite
                    x = np.where(alive, x, 0.0)
                    p = np.where(alive, p, 0.0)
                    ar = np.where(alive, ar, 0.0)
                    ai = np.where(alive, ai, 0.0)

            done = step_i + j + 1
            if next_sample < len(sample_steps) and sample_steps[next_sample] == done:
                record(next_sample)
                next_sample += 1
        step_i += chunk

    return BatchResult(sample_steps=sample_steps, samples=samples,
                       x=x, p=p, alpha=ar + 1j * ai,
                       alive=alive, failed_step=failed_step)


def step(s: State, cfg: IntegratorConfig, p: SystemParams, d: DerivedParams,
         rng: np.random.Generator) -> State:
    """One Euler-Maruyama step of a single trajectory."""
    res = run_batch(np.array([s.x]), np.array([s.p]), np.array([s.alpha]),
                    1, cfg, p, d, [rng])
    return State(x=float(res.x[0]), p=float(res.p[0]), alpha=complex(res.alpha[0]))


def evolve(s0: State, t_final: float, cfg: IntegratorConfig, p: SystemParams,
           d: DerivedParams, rng: np.random.Generator,
           observer=None, sample_stride: int = 1) -> State:
    """Integrate a single trajectory to t_final.

    ``observer(t, state)`` is called at every ``sample_stride``-th step
    (including step 0 and the final step).  t_final = 0 returns s0.
    """
    if t_final < 0.0:
        raise ValueError(f"t_final must be >= 0, got {t_final}")
    n_steps = int(round(t_final / cfg.dt))
    if n_steps == 0:
        if observer is not None:
            observer(0.0, s0)
        return s0
    res = run_batch(np.array([s0.x]), np.array([s0.p]), np.array([s0.alpha]),
                    n_steps, cfg, p, d, [rng],
                    sample_stride=sample_stride if observer is not None else 0)
    if observer is not None:
        for k, si in enumerate(res.sample_steps):
            xs, ps, re, im = res.samples[0, k]
            observer(si * cfg.dt, State(x=xs, p=ps, alpha=complex(re, im)))
    return State(x=float(res.x[0]), p=float(res.p[0]), alpha=complex(res.alpha[0]))
