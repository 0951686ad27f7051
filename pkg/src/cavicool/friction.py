"""Numerical linear-response friction and momentum diffusion.

The particle is dragged at constant velocity, x(t) = v t, through the
standing wave while the internal pair (sigma, alpha) follows

    dsigma/dt = (i delta_a - gamma) sigma - g0 cos(x) alpha - omega
    dalpha/dt = (i delta_c - kappa) alpha + g0 cos(x) sigma + eta_l

(low-saturation coherence plus cavity field).  After a transient the
cycle-averaged dipole force

    F = 2 g0 sin(x) Im(sigma* alpha)

is linear in v for small v; the friction coefficient is extracted as

    f1 = -(<F>(+v) - <F>(-v)) / (2 v),        f1 > 0 cools.

An adiabatic variant drags the field-only model (the same drift the
stochastic integrator uses) to isolate the cavity contribution.  The
dragged equations are linear, so the force settles to a drive-periodic
limit cycle at the rate min(gamma, kappa) per unit time; the default
transient of 50 periods is far more than needed at optical-scale decay
rates.

Momentum diffusion is estimated stochastically: particle frozen at x,
field noise on, D = growth rate of Var(p)/2, and the Einstein relation
k_B T = D/f1 gives the stationary temperature where f1 > 0.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorConfig, run_batch
from .params import SystemParams, derive, omega_from_eta_eff, steady_state_alpha

CONVERGENCE_RTOL = 1e-6     # period-to-period change of the mean force
LINEARITY_RTOL = 0.05       # allowed f1 change when v is halved


class ConvergenceError(RuntimeError):
    """Cycle average failed to settle after the transient periods."""


@dataclass(frozen=True)
class AtomFieldState:
    """Internal state for the drag model: coherence and field amplitude."""

    sigma: complex
    alpha: complex

    def __post_init__(self):
        if abs(self.sigma) > 1.0:
            warnings.warn(
                f"|sigma| = {abs(self.sigma):.3g} > 1: outside the "
                "low-saturation regime", stacklevel=2)


@dataclass(frozen=True)
class AtomFieldDerivative:
    dsigma: complex
    dalpha: complex


@dataclass(frozen=True)
class DragConfig:
    """Drag-method controls: velocity, period counts, ODE step."""

    v: float = 0.05
    n_transient_periods: int = 50
    n_average_periods: int = 20
    dt: float = 2e-3
    check_linearity: bool = True     # re-run at v/2, require < 5% change
    adiabatic: bool = False          # drag the field-only drift instead

    def __post_init__(self):
        if self.v == 0.0:
            raise ValueError("drag velocity must be nonzero")
        if self.n_transient_periods < 1 or self.n_average_periods < 1:
            raise ValueError("period counts must be >= 1")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


def _pump_amplitude(p: SystemParams) -> float:
    return p.omega if p.omega is not None else omega_from_eta_eff(p)


def atom_field_drift(s: AtomFieldState, x: float,
                     p: SystemParams) -> AtomFieldDerivative:
    """Coupled coherence-field drift at particle position x."""
    om = _pump_amplitude(p)
    c = math.cos(x)
    dsigma = (1j * p.delta_a - p.gamma) * s.sigma - p.g0 * c * s.alpha - om
    dalpha = (1j * p.delta_c - p.kappa) * s.alpha + p.g0 * c * s.sigma + p.eta_l
    return AtomFieldDerivative(dsigma=dsigma, dalpha=dalpha)


def dipole_force(s: AtomFieldState, x: float, p: SystemParams) -> float:
    """Semiclassical gradient force 2 g0 sin(x) Im(sigma* alpha)."""
    return 2.0 * p.g0 * math.sin(x) * (np.conj(s.sigma) * s.alpha).imag


def _drag_period_means(p: SystemParams, da, dc, v_signed, cfg: DragConfig):
    """Cycle means of the dipole force for lanes of (delta_a, delta_c, v).

    All lanes share |v| and the step grid; returns (means, sigma_max) with
    means shaped (lanes, n_average_periods).  RK4 on the prescribed-path
    linear system; rectangle-rule cycle averages (spectrally accurate for
    the asymptotically periodic force).
    """
    da = np.asarray(da, dtype=float)
    dc = np.asarray(dc, dtype=float)
    v_signed = np.asarray(v_signed, dtype=float)
    w = abs(v_signed[0])
    if not np.allclose(np.abs(v_signed), w):
        raise ValueError("all lanes must share |v|")
    sgn = np.sign(v_signed)

    period = 2.0 * math.pi / w
    n_per = max(1, math.ceil(period / cfg.dt))
    h = period / n_per
    n_tr, n_av = cfg.n_transient_periods, cfg.n_average_periods

    om = _pump_amplitude(p)
    kappa, gamma, g0, eta_l = p.kappa, p.gamma, p.g0, p.eta_l
    a_alp = 1j * dc - kappa
    means = np.zeros((da.size, n_av))
    sig_max = 0.0

    if cfg.adiabatic:
        u0 = np.full(da.size, np.nan)
        gamma0 = np.full(da.size, np.nan)
        eta_eff = np.full(da.size, np.nan)
        for i, dai in enumerate(da):
            try:
                di = derive(p.with_values(delta_a=float(dai)))
            except ValueError:
                continue                    # lane stays NaN, node is dropped
            u0[i], gamma0[i], eta_eff[i] = di.u0, di.gamma0, di.eta_eff
        alp = np.zeros(da.size, dtype=complex)

        def rate(a, c):
            c2 = c * c
            return ((-(kappa + gamma0 * c2) + 1j * (dc - u0 * c2)) * a
                    + eta_l - 1j * eta_eff * c)

        for k in range(n_tr * n_per + n_av * n_per):
            t = k * h
            if k >= n_tr * n_per:
                s = sgn * math.sin(w * t)
                c = math.cos(w * t)
                asq = alp.real ** 2 + alp.imag ** 2
                f = (u0 * asq * 2.0 * s * c + 2.0 * eta_eff * alp.real * s)
                means[:, (k - n_tr * n_per) // n_per] += f
            c1 = math.cos(w * t)
            c2 = math.cos(w * (t + 0.5 * h))
            c3 = math.cos(w * (t + h))
            k1 = rate(alp, c1)
            k2 = rate(alp + 0.5 * h * k1, c2)
            k3 = rate(alp + 0.5 * h * k2, c2)
            k4 = rate(alp + h * k3, c3)
            alp = alp + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    else:
        a_sig = 1j * da - gamma
        sig = np.zeros(da.size, dtype=complex)
        alp = np.zeros(da.size, dtype=complex)

        def rate2(sg, a, c):
            gc = g0 * c
            return (a_sig * sg - gc * a - om,
                    a_alp * a + gc * sg + eta_l)

        for k in range(n_tr * n_per + n_av * n_per):
            t = k * h
            if k >= n_tr * n_per:
                s = sgn * math.sin(w * t)
                f = 2.0 * g0 * s * (np.conj(sig) * alp).imag
                means[:, (k - n_tr * n_per) // n_per] += f
                m = np.abs(sig).max()
                sig_max = m if m > sig_max else sig_max
            c1 = math.cos(w * t)
            c2 = math.cos(w * (t + 0.5 * h))
            c3 = math.cos(w * (t + h))
            ks1, ka1 = rate2(sig, alp, c1)
            ks2, ka2 = rate2(sig + 0.5 * h * ks1, alp + 0.5 * h * ka1, c2)
            ks3, ka3 = rate2(sig + 0.5 * h * ks2, alp + 0.5 * h * ka2, c2)
            ks4, ka4 = rate2(sig + h * ks3, alp + h * ka3, c3)
            sig = sig + (h / 6.0) * (ks1 + 2.0 * ks2 + 2.0 * ks3 + ks4)
            alp = alp + (h / 6.0) * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4)

    means /= n_per
    return means, sig_max


def _f1_lanes(p: SystemParams, da, dc, v: float, cfg: DragConfig):
    """f1 and convergence flags for nodes (da[i], dc[i]) at drag speed v."""
    da = np.asarray(da, dtype=float)
    n = da.size
    v_signed = np.concatenate([np.full(n, v), np.full(n, -v)])
    means, sig_max = _drag_period_means(
        p, np.tile(da, 2), np.tile(np.asarray(dc, dtype=float), 2),
        v_signed, cfg)
    if sig_max > 1.0:
        warnings.warn(
            f"max |sigma| = {sig_max:.3g} > 1 during drag: outside the "
            "low-saturation regime", stacklevel=3)
    scale = np.maximum(np.abs(means).max(axis=1), 1e-30)
    drift_rel = (np.abs(np.diff(means, axis=1)).max(axis=1) / scale
                 if means.shape[1] > 1 else np.zeros(2 * n))
    converged = drift_rel <= CONVERGENCE_RTOL
    f_plus = means[:n].mean(axis=1)
    f_minus = means[n:].mean(axis=1)
    f1 = -(f_plus - f_minus) / (2.0 * v)
    return f1, converged[:n] & converged[n:], np.abs(means).max()


def friction_coefficient(p: SystemParams, cfg: DragConfig = DragConfig()) -> float:
    """Linear friction coefficient by the constant-velocity drag method."""
    v = abs(cfg.v)
    f1, ok, fscale = _f1_lanes(p, [p.delta_a], [p.delta_c], v, cfg)
    if not ok[0]:
        raise ConvergenceError(
            "period average not settled after "
            f"{cfg.n_transient_periods} transient periods "
            f"(period-to-period change > {CONVERGENCE_RTOL})")
    f1 = float(f1[0])
    if cfg.check_linearity:
        f1_half, ok_h, _ = _f1_lanes(p, [p.delta_a], [p.delta_c], v / 2.0, cfg)
        if not ok_h[0]:
            raise ConvergenceError("half-velocity check did not settle")
        f1_half = float(f1_half[0])
        floor = 1e-12 * fscale / v
        if abs(f1 - f1_half) > LINEARITY_RTOL * max(abs(f1), abs(f1_half)) + floor:
            raise ValueError(
                f"drag outside the linear-response regime: f1(v) = {f1:.6g}, "
                f"f1(v/2) = {f1_half:.6g}; reduce v")
    return f1


@dataclass
class FrictionMap:
    """f1 over a (delta_a, delta_c) grid; failed nodes are NaN."""

    delta_a: np.ndarray      # (na,)
    delta_c: np.ndarray      # (nc,)
    f1: np.ndarray           # (na, nc)
    converged: np.ndarray    # (na, nc) bool


def _map_chunk(args):
    p, da_flat, dc_flat, cfg = args
    v = abs(cfg.v)
    f1, ok, fscale = _f1_lanes(p, da_flat, dc_flat, v, cfg)
    if cfg.check_linearity:
        f1_half, ok_h, _ = _f1_lanes(p, da_flat, dc_flat, v / 2.0, cfg)
        floor = 1e-12 * fscale / v
        lin = (np.abs(f1 - f1_half)
               <= LINEARITY_RTOL * np.maximum(np.abs(f1), np.abs(f1_half))
               + floor)
        ok = ok & ok_h & lin
    return f1, ok


def friction_map(delta_a, delta_c, p: SystemParams,
                 cfg: DragConfig = DragConfig(), threads: int = 1) -> FrictionMap:
    """f1 at every node of the (delta_a, delta_c) grid.

    Nodes are independent; they run vectorised in chunks, optionally
    spread over a process pool.  Per-node failures (non-finite result,
    no convergence, linearity violation) become NaN with converged
    False rather than aborting the map.
    """
    da = np.asarray(delta_a, dtype=float)
    dc = np.asarray(delta_c, dtype=float)
    if da.size == 0 or dc.size == 0:
        raise ValueError("grid axes must be non-empty")
    ga, gc = np.meshgrid(da, dc, indexing="ij")
    flat_a, flat_c = ga.ravel(), gc.ravel()

    n = flat_a.size
    if threads > 1 and n > 1:
        from concurrent.futures import ProcessPoolExecutor

        chunks = np.array_split(np.arange(n), min(threads, n))
        jobs = [(p, flat_a[ix], flat_c[ix], cfg) for ix in chunks]
        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(_map_chunk, jobs))
        f1 = np.concatenate([r[0] for r in parts])
        ok = np.concatenate([r[1] for r in parts])
    else:
        f1, ok = _map_chunk((p, flat_a, flat_c, cfg))

    ok = ok & np.isfinite(f1)
    f1 = np.where(ok, f1, np.nan)
    return FrictionMap(delta_a=da, delta_c=dc,
                       f1=f1.reshape(da.size, dc.size),
                       converged=ok.reshape(da.size, dc.size))


def diffusion_coefficient(p: SystemParams, x, n_traj: int = 1024,
                          t_final: float = 2.0, dt: float = 5e-4,
                          seed: int = 0):
    """Momentum diffusion D at frozen position(s) x, from noisy field runs.

    Starts the field at its local steady state, accumulates momentum
    kicks with the particle pinned, and fits the linear growth of
    Var(p): D = slope/2.  Scalar x gives a float, an array gives
    per-position values.
    """
    xs = np.atleast_1d(np.asarray(x, dtype=float))
    d = derive(p)
    x0 = np.repeat(xs, n_traj)
    a0 = np.concatenate([
        np.full(n_traj, steady_state_alpha(float(xi), p, d)) for xi in xs])
    cfg = IntegratorConfig(dt=dt, noise=True, freeze_position=True)
    n_steps = int(round(t_final / dt))
    stride = max(1, n_steps // 80)
    rngs = [np.random.default_rng(np.random.SeedSequence((seed, i)))
            for i in range(x0.size)]
    res = run_batch(x0, np.zeros_like(x0), a0, n_steps, cfg, p, d, rngs,
                    sample_stride=stride, on_nonfinite="raise")
    t = res.sample_steps * dt
    ps = res.samples[:, :, 1].reshape(xs.size, n_traj, -1)
    var = ps.var(axis=1)                      # (nx, n_samples)
    keep = t >= 0.25 * t_final                # skip the correlation buildup
    slopes = np.array([np.polyfit(t[keep], v[keep], 1)[0] for v in var])
    out = slopes / 2.0
    return float(out[0]) if np.ndim(x) == 0 else out


def einstein_temperature(d: float, f1: float) -> float:
    """Stationary temperature k_B T = D/f1; only defined where f1 > 0."""
    if f1 <= 0.0:
        raise ValueError(
            f"f1 = {f1:.6g} <= 0: no stationary temperature in a "
            "non-cooling region")
    return d / f1
