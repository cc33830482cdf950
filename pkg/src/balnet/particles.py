"""Euler-Maruyama integration of the coupled 2n-dimensional network SDE.

The pairwise interaction sum is never formed: because the connectivity
factorizes over M basis functions, each step reduces the n^2 interaction
terms to 4M weighted sums S[alpha, beta, b] = sum_k h_b(x_k) G_ab(z_k),
then reconstructs every neuron's drive from M basis values, O(n*M) total.

Reproducibility contract: noise comes from counter-based Philox streams
keyed by (seed, context) where the context encodes population and step
index.  Draws therefore never depend on recording stride, worker count, or
evaluation order, and identical (config, seed) gives bit-identical output.
All reductions use fixed-order numpy pairwise summation rather than BLAS
matmuls so results cannot vary with the thread cap either.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

from .errors import BlowUp, DimensionMismatch, NegativeVariance
from .model import NetworkModel, build_projection, decompose

BLOWUP_THRESHOLD = 1e6

_CTX_INIT_E = 0
_CTX_INIT_I = 1


def _step_context(step: int, pop: int) -> int:
    return 2 + 2 * step + pop


class NoiseSource:
    """Counter-based normal streams: one Philox stream per (seed, context)."""

    def __init__(self, seed: int):
        self.seed = int(seed) & 0xFFFFFFFFFFFFFFFF

    def normals(self, context: int, count: int) -> np.ndarray:
        bits = np.random.Philox(key=np.array([self.seed, context], dtype=np.uint64))
        return np.random.Generator(bits).standard_normal(count)


@dataclass(frozen=True, eq=False)
class ParticleEnsemble:
    """Positions and states of n excitatory plus n inhibitory neurons.
    The j-th neuron of each population sits at the same position."""

    n: int
    positions: np.ndarray
    z_e: np.ndarray
    z_i: np.ndarray
    t: float = 0.0
    step: int = 0

    def __post_init__(self):
        for arr in (self.positions, self.z_e, self.z_i):
            if np.asarray(arr).shape != (self.n,):
                raise DimensionMismatch("expected arrays of length %d" % self.n)


@dataclass(frozen=True, eq=False)
class InitialLaw:
    """Initial mean coefficients (e block then i block) and variances."""

    v: np.ndarray
    k_e: float
    k_i: float


@dataclass(frozen=True, eq=False)
class SimConfig:
    model: NetworkModel
    n: int
    dt: float
    horizon: float
    seed: int
    initial: InitialLaw
    observable_stride: int = 10
    snapshot_stride: int = 0  # 0 disables snapshots; else multiple of observable_stride

    def __post_init__(self):
        if self.dt <= 0 or self.horizon < self.dt or self.n < 1:
            raise ValueError("need dt > 0, horizon >= dt, n >= 1")
        if self.observable_stride < 1:
            raise ValueError("observable_stride must be >= 1")
        if self.snapshot_stride and self.snapshot_stride % self.observable_stride:
            raise ValueError("snapshot_stride must be a multiple of observable_stride")


@dataclass(eq=False)
class ObservableSeries:
    """Per-record empirical mean coefficients and fluctuation variances,
    plus optional fluctuation snapshots for distribution-level comparison."""

    times: np.ndarray
    v_e: np.ndarray              # (records, M)
    v_i: np.ndarray
    k_e: np.ndarray              # (records,)
    k_i: np.ndarray
    projection_residuals: np.ndarray   # max_a |sum_j h_a(x_j) y_j| over both pops
    snapshot_times: np.ndarray
    snapshots_y_e: List[np.ndarray] = field(default_factory=list)
    snapshots_y_i: List[np.ndarray] = field(default_factory=list)
    final: Optional[ParticleEnsemble] = None


def sample_initial(config: SimConfig) -> ParticleEnsemble:
    """z_j(0) = m(0, x_j) + zeta_j sqrt(K(0)), zeta iid standard normal.

    Deterministic given the seed; K = 0 gives the deterministic start."""
    init = config.initial
    if init.k_e < 0 or init.k_i < 0:
        raise NegativeVariance("initial variances must be >= 0")
    basis = config.model.basis
    m = basis.size
    v = np.asarray(init.v, dtype=float)
    if v.shape != (2 * m,):
        raise DimensionMismatch("initial coefficients must have length %d" % (2 * m))
    positions = basis.positions(config.n)
    bv = basis.eval(positions)
    mean_e = bv @ v[:m]
    mean_i = bv @ v[m:]
    noise = NoiseSource(config.seed)
    z_e = mean_e + math.sqrt(init.k_e) * noise.normals(_CTX_INIT_E, config.n)
    z_i = mean_i + math.sqrt(init.k_i) * noise.normals(_CTX_INIT_I, config.n)
    return ParticleEnsemble(n=config.n, positions=positions, z_e=z_e, z_i=z_i,
                            t=0.0, step=0)


def _interaction(z_e: np.ndarray, z_i: np.ndarray, bv: np.ndarray,
                 model: NetworkModel):
    """O(n*M) evaluation of both populations' interaction drives."""
    n, m = bv.shape
    gains = model.gains
    kernel = model.kernel
    per_source = {"e": z_e, "i": z_i}
    sums = {}
    for alpha in ("e", "i"):
        for beta in ("e", "i"):
            g = gains.get(alpha, beta).value(per_source[beta])
            s = np.empty(m)
            for b in range(m):
                s[b] = np.sum(bv[:, b] * g)
            sums[alpha, beta] = s
    scale = 1.0 / math.sqrt(n)
    out = []
    for alpha in ("e", "i"):
        w = kernel.block(alpha, "e") @ sums[alpha, "e"] \
            - kernel.block(alpha, "i") @ sums[alpha, "i"]
        drift = np.zeros(n)
        for a in range(m):
            drift += w[a] * bv[:, a]
        out.append(scale * drift)
    return out[0], out[1]


def interaction_drift(ensemble: ParticleEnsemble, model: NetworkModel):
    """Per-neuron interaction drift for both populations.

    Equals the direct double sum
    n^-1/2 sum_k [K_ae(x_j, x_k) G_ae(z_e_k) - K_ai(x_j, x_k) G_ai(z_i_k)]
    through the finite-rank reduction.
    """
    if not (np.all(np.isfinite(ensemble.z_e)) and np.all(np.isfinite(ensemble.z_i))):
        raise ValueError("ensemble states must be finite")
    bv = model.basis.eval(ensemble.positions)
    return _interaction(ensemble.z_e, ensemble.z_i, bv, model)


def _advance(ensemble: ParticleEnsemble, config: SimConfig, noise: NoiseSource,
             bv: np.ndarray) -> ParticleEnsemble:
    model = config.model
    dyn = model.dynamics
    dt = config.dt
    sqdt = math.sqrt(dt)
    drift_e, drift_i = _interaction(ensemble.z_e, ensemble.z_i, bv, model)
    xi_e = noise.normals(_step_context(ensemble.step, 0), ensemble.n)
    xi_i = noise.normals(_step_context(ensemble.step, 1), ensemble.n)
    sig_e = dyn.sigma_e.value(ensemble.positions, ensemble.z_e)
    sig_i = dyn.sigma_i.value(ensemble.positions, ensemble.z_i)
    z_e = ensemble.z_e + (dyn.f_e.value(ensemble.z_e) + drift_e) * dt + sig_e * sqdt * xi_e
    z_i = ensemble.z_i + (dyn.f_i.value(ensemble.z_i) + drift_i) * dt + sig_i * sqdt * xi_i
    step = ensemble.step + 1
    t = step * dt
    for pop, z in (("e", z_e), ("i", z_i)):
        worst = int(np.argmax(np.abs(z)))
        if not np.isfinite(z[worst]) or abs(z[worst]) > BLOWUP_THRESHOLD:
            raise BlowUp("state blew up at t = %g (population %s, neuron %d, "
                         "|z| = %g)" % (t, pop, worst, abs(z[worst])),
                         time=t, population=pop, index=worst)
    return ParticleEnsemble(n=ensemble.n, positions=ensemble.positions,
                            z_e=z_e, z_i=z_i, t=t, step=step)


def em_step(ensemble: ParticleEnsemble, config: SimConfig,
            noise: NoiseSource) -> ParticleEnsemble:
    """One Euler-Maruyama step; noise keyed by the ensemble's step counter."""
    bv = config.model.basis.eval(ensemble.positions)
    return _advance(ensemble, config, noise, bv)


def simulate(config: SimConfig) -> ObservableSeries:
    """Run the full horizon, recording decomposed observables every
    observable_stride steps (plus the initial and final step).

    On blow-up the partial series is attached to the raised error.
    """
    ws = build_projection(config.model.basis, config.n)
    noise = NoiseSource(config.seed)
    ensemble = sample_initial(config)
    m = config.model.basis.size
    n_steps = int(round(config.horizon / config.dt))

    times, ve_rows, vi_rows, ke_rows, ki_rows, proj_rows = [], [], [], [], [], []
    snap_times, snaps_e, snaps_i = [], [], []

    def record(ens, with_snapshot):
        v_e, y_e = decompose(ws, ens.z_e)
        v_i, y_i = decompose(ws, ens.z_i)
        times.append(ens.step * config.dt)
        ve_rows.append(v_e)
        vi_rows.append(v_i)
        ke_rows.append(float(np.sum(y_e * y_e) / ens.n))
        ki_rows.append(float(np.sum(y_i * y_i) / ens.n))
        worst = 0.0
        for a in range(m):
            worst = max(worst,
                        abs(float(np.sum(ws.basis_values[:, a] * y_e))),
                        abs(float(np.sum(ws.basis_values[:, a] * y_i))))
        proj_rows.append(worst)
        if with_snapshot:
            snap_times.append(ens.step * config.dt)
            snaps_e.append(y_e.copy())
            snaps_i.append(y_i.copy())

    def snapshot_due(step):
        return bool(config.snapshot_stride) and step % config.snapshot_stride == 0

    def build_series(final):
        return ObservableSeries(times=np.array(times),
                                v_e=np.stack(ve_rows), v_i=np.stack(vi_rows),
                                k_e=np.array(ke_rows), k_i=np.array(ki_rows),
                                projection_residuals=np.array(proj_rows),
                                snapshot_times=np.array(snap_times),
                                snapshots_y_e=snaps_e, snapshots_y_i=snaps_i,
                                final=final)

    record(ensemble, snapshot_due(0))
    try:
        for step in range(1, n_steps + 1):
            ensemble = _advance(ensemble, config, noise, ws.basis_values)
            if step % config.observable_stride == 0 or step == n_steps:
                record(ensemble, snapshot_due(step) or
                       (bool(config.snapshot_stride) and step == n_steps))
    except BlowUp as err:
        err.partial = build_series(None)
        raise
    return build_series(ensemble)
