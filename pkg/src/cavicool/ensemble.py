"""Monte Carlo trajectory ensembles and their observables.

Protocol: initial positions are normally distributed around a unit-cell
center (default the node x = pi/2), momenta are thermal with Var(p) =
m k_B T0 (m = 1/2), the field starts at alpha0 (default empty).  Each
trajectory owns an independent RNG stream seeded by (seed, trajectory
index), so results are reproducible and never depend on how work is
distributed.  Trajectories are integrated in fixed-size batches; each
batch contributes partial sums that are merged in batch order, which
makes ensemble statistics invariant under the worker count.

Observables per sample time: mean intensity <|alpha|^2>, mean kinetic
energy <p^2> (code units), bunching B = <cos^2 x>.  Steady-state scalars
average the final ``steady_window`` of the run; the cooling time is the
first time the mean kinetic energy drops below a threshold (default
hbar*kappa, i.e. kappa in code units) and stays below it for one steady
window.

Trajectories that leave the finite domain are excluded entirely (all
their samples dropped); more than 1% exclusions fails the run.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dynamics import IntegratorConfig, State, run_batch
from .params import DerivedParams, SystemParams, derive, potential

BATCH = 256      # trajectories per partial sum; fixed so that worker
                 # count never changes the reduction order


class EnsembleError(RuntimeError):
    """Ensemble-level failure (too many excluded trajectories)."""


@dataclass(frozen=True)
class InitialConditions:
    """Initial phase-space distribution of the ensemble."""

    kbt0: float
    x_center: float = math.pi / 2.0
    x_sigma: float = math.pi / 8.0
    alpha0: complex = 0.0j

    def __post_init__(self):
        if self.kbt0 < 0.0:
            raise ValueError(f"kbt0 must be >= 0, got {self.kbt0}")
        if self.x_sigma < 0.0:
            raise ValueError(f"x_sigma must be >= 0, got {self.x_sigma}")


@dataclass(frozen=True)
class EnsembleConfig:
    """Run controls: size, duration, sampling and averaging windows."""

    n_traj: int = 2000
    t_final: float = 100.0
    sample_stride: int = 100
    steady_window: float = 20.0
    seed: int = 0
    dt: float = 5e-4
    noise: bool = True
    freeze_position: bool = False

    def __post_init__(self):
        if self.n_traj < 1:
            raise ValueError(f"n_traj must be >= 1, got {self.n_traj}")
        if self.t_final <= 0.0:
            raise ValueError(f"t_final must be > 0, got {self.t_final}")
        if self.sample_stride < 1:
            raise ValueError(
                f"sample_stride must be >= 1, got {self.sample_stride}")
        if not 0.0 < self.steady_window <= self.t_final:
            raise ValueError(
                f"steady_window must be in (0, t_final], got "
                f"{self.steady_window} with t_final {self.t_final}")
        if self.dt <= 0.0:
            raise ValueError(f"dt must be > 0, got {self.dt}")


@dataclass
class EnsembleStats:
    """Time-resolved ensemble means plus steady-state summaries."""

    t: np.ndarray
    mean_intensity: np.ndarray
    e_kin: np.ndarray
    bunching_t: np.ndarray
    steady_intensity: float
    steady_e_kin: float
    steady_bunching: float
    steady_intensity_se: float
    steady_e_kin_se: float
    steady_bunching_se: float
    saturation: float            # s * steady_intensity
    cooling_time: float | None
    stationarity: float          # relative e_kin drift across the window
    steady_window: float
    n_traj: int
    n_excluded: int


def trajectory_rng(seed: int, index: int) -> np.random.Generator:
    """The RNG stream owned by one trajectory."""
    return np.random.default_rng(np.random.SeedSequence((seed, index)))


def sample_initial(ic: InitialConditions, rng: np.random.Generator) -> State:
    """Draw one initial state: x, then p, from the given stream."""
    x = rng.normal(ic.x_center, ic.x_sigma)
    p = rng.normal(0.0, math.sqrt(ic.kbt0 / 2.0))   # Var(p) = m kbT0, m = 1/2
    return State(x=x, p=p, alpha=ic.alpha0)


def bunching(xs) -> float:
    """Localization parameter B = <cos^2 x>; 1 antinodes, 0 nodes."""
    xs = np.asarray(xs, dtype=float)
    if xs.size == 0:
        raise ValueError("bunching needs at least one position")
    return float(np.mean(np.cos(xs) ** 2))


def _batch_ranges(n_traj: int):
    return [(lo, min(lo + BATCH, n_traj)) for lo in range(0, n_traj, BATCH)]


def _integrate_block(p: SystemParams, d: DerivedParams, ic: InitialConditions,
                     cfg: EnsembleConfig, lo: int, hi: int, n_steps: int,
                     sample_stride: int):
    """Run trajectories lo..hi-1 and return the raw BatchResult."""
    nb = hi - lo
    rngs = [trajectory_rng(cfg.seed, i) for i in range(lo, hi)]
    x0 = np.empty(nb)
    p0 = np.empty(nb)
    for j, rng in enumerate(rngs):
        x0[j] = rng.normal(ic.x_center, ic.x_sigma)
        p0[j] = rng.normal(0.0, math.sqrt(ic.kbt0 / 2.0))
    a0 = np.full(nb, complex(ic.alpha0))
    icfg = IntegratorConfig(dt=cfg.dt, noise=cfg.noise, seed=cfg.seed,
                            freeze_position=cfg.freeze_position)
    return run_batch(x0, p0, a0, n_steps, icfg, p, d, rngs,
                     sample_stride=sample_stride, on_nonfinite="exclude")


def _stats_job(args):
    """Partial sums for one batch: per-time observable sums over alive
    trajectories plus per-trajectory steady-window means (for standard
    errors)."""
    p, d, ic, cfg, lo, hi, n_steps, steady_from = args
    res = _integrate_block(p, d, ic, cfg, lo, hi, n_steps, cfg.sample_stride)
    alive = res.alive
    s = res.samples[alive]                     # (na, S, 4)
    intensity = s[:, :, 2] ** 2 + s[:, :, 3] ** 2
    ekin = s[:, :, 1] ** 2
    bun = np.cos(s[:, :, 0]) ** 2
    sums = np.stack([intensity.sum(axis=0), ekin.sum(axis=0),
                     bun.sum(axis=0)])
    w = slice(steady_from, None)
    per_traj = np.stack([intensity[:, w].mean(axis=1),
                         ekin[:, w].mean(axis=1),
                         bun[:, w].mean(axis=1)])   # (3, na)
    return (lo, res.sample_steps, sums, per_traj,
            int(alive.sum()), int((~alive).sum()))


def _final_state_job(args):
    """Final (x, p, alpha) of one batch at the snapshot time."""
    p, d, ic, cfg, lo, hi, n_steps = args
    res = _integrate_block(p, d, ic, cfg, lo, hi, n_steps, 0)
    return (lo, res.x[res.alive], res.alpha[res.alive],
            int((~res.alive).sum()))


def _run_jobs(jobs, worker, threads: int):
    if threads > 1 and len(jobs) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=threads) as pool:
            parts = list(pool.map(worker, jobs))
    else:
        parts = [worker(j) for j in jobs]
    parts.sort(key=lambda r: r[0])             # merge in batch order
    return parts


def _check_exclusions(n_excluded: int, n_traj: int):
    if n_excluded > 0.01 * n_traj:
        raise EnsembleError(
            f"{n_excluded} of {n_traj} trajectories diverged "
            "(> 1% exclusions)")


def run_ensemble(p: SystemParams, ic: InitialConditions,
                 cfg: EnsembleConfig, threads: int = 1) -> EnsembleStats:
    """Integrate the ensemble and reduce it to EnsembleStats."""
    d = derive(p)
    n_steps = int(round(cfg.t_final / cfg.dt))

    # sample index where the steady window starts (known up front)
    steps = list(range(0, n_steps + 1, cfg.sample_stride))
    if steps[-1] != n_steps:
        steps.append(n_steps)
    t_grid = np.array(steps) * cfg.dt
    steady_from = int(np.searchsorted(
        t_grid, cfg.t_final - cfg.steady_window - 1e-12))

    jobs = [(p, d, ic, cfg, lo, hi, n_steps, steady_from)
            for lo, hi in _batch_ranges(cfg.n_traj)]
    parts = _run_jobs(jobs, _stats_job, threads)

    sample_times = parts[0][1] * cfg.dt
    sums = np.zeros_like(parts[0][2])
    per_traj = []
    n_alive = 0
    n_excluded = 0
    for _, _, s, pt, na, nx in parts:
        sums += s
        per_traj.append(pt)
        n_alive += na
        n_excluded += nx
    _check_exclusions(n_excluded, cfg.n_traj)
    if n_alive == 0:
        raise EnsembleError("no surviving trajectories")

    mean_intensity, e_kin, bun_t = sums / n_alive
    pt = np.concatenate(per_traj, axis=1)       # (3, n_alive)
    steady = pt.mean(axis=1)
    if n_alive >= 2:
        se = pt.std(axis=1, ddof=1) / math.sqrt(n_alive)
    else:
        se = np.full(3, np.nan)

    w = slice(steady_from, None)
    slope = np.polyfit(sample_times[w], e_kin[w], 1)[0]
    stationarity = abs(slope) * cfg.steady_window / max(steady[1], 1e-300)

    stats = EnsembleStats(
        t=sample_times, mean_intensity=mean_intensity, e_kin=e_kin,
        bunching_t=bun_t,
        steady_intensity=float(steady[0]), steady_e_kin=float(steady[1]),
        steady_bunching=float(steady[2]),
        steady_intensity_se=float(se[0]), steady_e_kin_se=float(se[1]),
        steady_bunching_se=float(se[2]),
        saturation=float(d.s * steady[0]),
        cooling_time=None, stationarity=float(stationarity),
        steady_window=cfg.steady_window,
        n_traj=cfg.n_traj, n_excluded=n_excluded)
    stats.cooling_time = cooling_time(stats, p.kappa)
    return stats


def cooling_time(stats: EnsembleStats, threshold: float) -> float | None:
    """First time <E_kin> drops below threshold and stays below for one
    steady window (truncated at the end of the run); None if never."""
    if threshold <= 0.0:
        raise ValueError(f"threshold must be > 0, got {threshold}")
    e = stats.e_kin
    t = stats.t
    below = e < threshold
    for i in np.flatnonzero(below):
        j = np.searchsorted(t, t[i] + stats.steady_window, side="right")
        if below[i:j].all():
            return float(t[i])
    return None


@dataclass
class PositionHistogram:
    """Snapshot position distribution over one optical wavelength.

    The potential overlays are evaluated at the ensemble-mean field of
    the trajectories with Re alpha > 0 and < 0 separately (a pumped
    cavity can organize into either sign); an unpopulated branch is NaN.
    """

    bin_edges: np.ndarray        # (n_bins + 1,) over [0, 2 pi)
    counts: np.ndarray           # (n_bins,) int
    potential_plus: np.ndarray   # (n_bins,) at bin centers
    potential_minus: np.ndarray
    mean_alpha_plus: complex
    mean_alpha_minus: complex
    t_snapshot: float
    n_traj: int
    n_excluded: int


def position_histogram(p: SystemParams, ic: InitialConditions,
                       cfg: EnsembleConfig, t_snapshot: float,
                       n_bins: int = 60, threads: int = 1) -> PositionHistogram:
    """Bin the ensemble positions at t_snapshot into one wavelength."""
    if not 0.0 <= t_snapshot <= cfg.t_final:
        raise ValueError(
            f"t_snapshot must be in [0, t_final], got {t_snapshot}")
    if n_bins < 1:
        raise ValueError(f"n_bins must be >= 1, got {n_bins}")
    d = derive(p)
    n_steps = int(round(t_snapshot / cfg.dt))
    jobs = [(p, d, ic, cfg, lo, hi, n_steps)
            for lo, hi in _batch_ranges(cfg.n_traj)]
    parts = _run_jobs(jobs, _final_state_job, threads)

    xs = np.concatenate([r[1] for r in parts])
    alphas = np.concatenate([r[2] for r in parts])
    n_excluded = sum(r[3] for r in parts)
    _check_exclusions(n_excluded, cfg.n_traj)

    counts, edges = np.histogram(np.mod(xs, 2.0 * math.pi),
                                 bins=n_bins, range=(0.0, 2.0 * math.pi))
    centers = 0.5 * (edges[:-1] + edges[1:])

    def branch(mask):
        if not mask.any():
            return complex(np.nan, np.nan), np.full(n_bins, np.nan)
        a = complex(alphas[mask].mean())
        return a, np.array([potential(c, a, d) for c in centers])

    a_plus, v_plus = branch(alphas.real > 0.0)
    a_minus, v_minus = branch(alphas.real < 0.0)
    return PositionHistogram(
        bin_edges=edges, counts=counts,
        potential_plus=v_plus, potential_minus=v_minus,
        mean_alpha_plus=a_plus, mean_alpha_minus=a_minus,
        t_snapshot=t_snapshot, n_traj=cfg.n_traj, n_excluded=n_excluded)
