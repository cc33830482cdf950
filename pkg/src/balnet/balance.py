"""Balanced-state machinery: residual, Jacobian, stability margin, root
solving, and the implicit mean dynamics on the balance constraint.

With linear-decay drift and additive noise the population law of the
fluctuations is centered Gaussian with a spatially constant variance per
population, so the balance condition becomes 2M scalar equations

    r[(alpha, a)] = int int h_a(x') [ K_ae(x', x) E_e(x) - K_ai(x', x) E_i(x) ]
                    dk(x) dk(x')

where E_beta(x) is the Gauss-Hermite expectation of the (alpha, beta) gain at
mean v_beta(x) = sum_b v_b h_b(x) and variance K_beta.  Spatial integrals use
a uniform 256-point rule on the ring (trapezoid on a periodic integrand) and
collapse to single evaluations on the point domain.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .errors import (EigenFailure, NoConvergence, NonPositiveVariance,
                     SingularJacobian, UnstableRoot)
from .model import NetworkModel
from .quadrature import (DEFAULT_RULE_ORDER, VARIANCE_FLOOR,
                         GaussHermiteRule)

SPATIAL_GRID_POINTS = 256
DET_GUARD = 1e-12
# Roots whose margin is within this band of zero are classified unstable:
# marginal spectra (exactly zero real parts) otherwise flip sign with
# rounding noise and make the outcome irreproducible.
STABILITY_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class MomentState:
    """Basis coefficients of the two mean fields plus the per-population
    fluctuation variances.  Coefficient ordering: e entries a = 1..M, then
    i entries."""

    v: np.ndarray
    k_e: float
    k_i: float
    t: float = 0.0

    def __post_init__(self):
        v = np.asarray(self.v, dtype=float)
        object.__setattr__(self, "v", v)
        if not np.all(np.isfinite(v)):
            raise ValueError("mean coefficients must be finite")
        for k in (self.k_e, self.k_i):
            if not k > VARIANCE_FLOOR:
                raise NonPositiveVariance("variance %g below floor" % k)


@dataclass(frozen=True, eq=False)
class BalanceReport:
    residual: np.ndarray
    jacobian: np.ndarray
    stability_margin: float
    converged: bool
    iterations: int
    root: np.ndarray = None  # the located mean coefficients, for diagnosis


class BalanceEvaluator:
    """Precomputed spatial grid, basis table, and quadrature rule for one
    model; all evaluation methods are pure."""

    def __init__(self, model: NetworkModel, rule_order: int = DEFAULT_RULE_ORDER,
                 grid_points: int = SPATIAL_GRID_POINTS):
        if not model.dynamics.is_gaussian_closable:
            raise ValueError("limit-side evaluation requires linear decay "
                             "drift and additive noise")
        self.model = model
        self.rule = GaussHermiteRule.of_order(rule_order)
        self.grid_x, self.grid_w = model.basis.quad_grid(grid_points)
        self.grid_h = model.basis.eval(self.grid_x)          # (G, M)
        hw = self.grid_h * self.grid_w[:, None]
        self.gram = hw.T @ self.grid_h                       # int h_a h_b dk
        self.m = model.basis.size

    def mean_fields(self, v: np.ndarray):
        v = np.asarray(v, dtype=float)
        if v.shape != (2 * self.m,):
            raise ValueError("expected %d coefficients" % (2 * self.m))
        return self.grid_h @ v[:self.m], self.grid_h @ v[self.m:]

    def _grid_expect(self, alpha, beta, mean_field, variance, mode):
        """E over N(0, variance) of the (alpha, beta) gain (or a weighted
        variant) shifted by the mean field, at every grid node."""
        if not variance > VARIANCE_FLOOR:
            raise NonPositiveVariance("variance %g below floor" % variance)
        gain = self.model.gains.get(alpha, beta)
        u = self.rule.nodes
        z = mean_field[:, None] + math.sqrt(2.0 * variance) * u[None, :]
        if mode == "value":
            vals = gain.value(z)
            w = self.rule.weights
        elif mode == "deriv":
            vals = gain.deriv(z)
            w = self.rule.weights
        else:  # variance score: d/dV of the plain expectation
            vals = gain.value(z)
            w = self.rule.weights * (2.0 * u * u - 1.0) / (2.0 * variance)
        return vals @ w / math.sqrt(math.pi)

    def _projected(self, field_values):
        """int h_b(x) field(x) dk(x) for all b."""
        return self.grid_h.T @ (self.grid_w * field_values)

    def residual(self, state: MomentState) -> np.ndarray:
        ve, vi = self.mean_fields(state.v)
        out = np.empty(2 * self.m)
        for row, alpha in enumerate(("e", "i")):
            exc = self._projected(self._grid_expect(alpha, "e", ve, state.k_e, "value"))
            inh = self._projected(self._grid_expect(alpha, "i", vi, state.k_i, "value"))
            ce = self.model.kernel.block(alpha, "e")
            ci = self.model.kernel.block(alpha, "i")
            out[row * self.m:(row + 1) * self.m] = self.gram @ (ce @ exc - ci @ inh)
        return out

    def jacobian(self, state: MomentState) -> np.ndarray:
        ve, vi = self.mean_fields(state.v)
        out = np.empty((2 * self.m, 2 * self.m))
        for row, alpha in enumerate(("e", "i")):
            for col, (beta, field, k, sign) in enumerate((("e", ve, state.k_e, 1.0),
                                                          ("i", vi, state.k_i, -1.0))):
                dgain = self._grid_expect(alpha, beta, field, k, "deriv")
                # T[b', b] = int h_b' h_b E'(x) dk(x)
                t = self.grid_h.T @ (self.grid_h * (self.grid_w * dgain)[:, None])
                block = sign * self.gram @ self.model.kernel.block(alpha, beta) @ t
                out[row * self.m:(row + 1) * self.m,
                    col * self.m:(col + 1) * self.m] = block
        return out

    def covariance_rates(self, state: MomentState):
        dyn = self.model.dynamics
        kdot_e = -2.0 * state.k_e / dyn.f_e.tau + dyn.sigma_e.level ** 2
        kdot_i = -2.0 * state.k_i / dyn.f_i.tau + dyn.sigma_i.level ** 2
        return kdot_e, kdot_i

    def implicit_forcing(self, state: MomentState) -> np.ndarray:
        """H = dG/dK_e * Kdot_e + dG/dK_i * Kdot_i, the drift of the residual
        along the covariance flow at frozen means."""
        ve, vi = self.mean_fields(state.v)
        kdot_e, kdot_i = self.covariance_rates(state)
        out = np.empty(2 * self.m)
        for row, alpha in enumerate(("e", "i")):
            exc = self._projected(self._grid_expect(alpha, "e", ve, state.k_e, "score"))
            inh = self._projected(self._grid_expect(alpha, "i", vi, state.k_i, "score"))
            ce = self.model.kernel.block(alpha, "e")
            ci = self.model.kernel.block(alpha, "i")
            out[row * self.m:(row + 1) * self.m] = \
                self.gram @ (kdot_e * (ce @ exc) - kdot_i * (ci @ inh))
        return out

    def mean_rhs(self, state: MomentState) -> np.ndarray:
        jac = self.jacobian(state)
        if abs(np.linalg.det(jac)) < DET_GUARD:
            raise SingularJacobian("|det J| = %g below guard"
                                   % abs(np.linalg.det(jac)))
        res = self.residual(state)
        if np.max(np.abs(res)) > 1e-6:
            warnings.warn("mean_rhs evaluated off the balance constraint "
                          "(|residual| = %g)" % np.max(np.abs(res)),
                          stacklevel=2)
        return -np.linalg.solve(jac, self.implicit_forcing(state))


def residual(model: NetworkModel, state: MomentState, rule_order: int = DEFAULT_RULE_ORDER) -> np.ndarray:
    """Balance residual; zero exactly on the balanced set."""
    return BalanceEvaluator(model, rule_order).residual(state)


def jacobian(model: NetworkModel, state: MomentState, rule_order: int = DEFAULT_RULE_ORDER) -> np.ndarray:
    """Derivative of the residual in the mean coefficients (analytic gain
    derivatives; e columns carry +, i columns -)."""
    return BalanceEvaluator(model, rule_order).jacobian(state)


def stability_margin(jac: np.ndarray) -> float:
    """Largest real part over the eigenvalues; negative means stable."""
    jac = np.asarray(jac, dtype=float)
    if jac.ndim != 2 or jac.shape[0] != jac.shape[1]:
        raise ValueError("stability margin needs a square matrix")
    if not np.all(np.isfinite(jac)):
        raise ValueError("matrix entries must be finite")
    try:
        eigs = np.linalg.eigvals(jac)
    except np.linalg.LinAlgError as err:
        raise EigenFailure(str(err)) from err
    return float(np.max(eigs.real))


def mean_rhs(model: NetworkModel, state: MomentState, rule_order: int = DEFAULT_RULE_ORDER) -> np.ndarray:
    """-J^-1 H: the mean velocity that keeps the residual identically zero
    while the covariances relax."""
    return BalanceEvaluator(model, rule_order).mean_rhs(state)


def solve_balance(model: NetworkModel, k_e: float, k_i: float, v_guess,
                  rule_order: int = DEFAULT_RULE_ORDER, tol: float = 1e-10,
                  max_iter: int = 100, evaluator: BalanceEvaluator = None):
    """Damped Newton solve of the balance equations at fixed covariances.

    Returns (v, report) with |residual|_inf < tol and a strictly stable
    Jacobian.  Raises NoConvergence on iteration exhaustion or step
    underflow, and UnstableRoot (report attached) when a root exists but its
    margin is not below -STABILITY_TOL.
    """
    ev = evaluator if evaluator is not None else BalanceEvaluator(model, rule_order)
    v = np.array(v_guess, dtype=float).copy()
    if v.shape != (2 * ev.m,):
        raise ValueError("guess must have length %d" % (2 * ev.m))

    def res_at(vec):
        return ev.residual(MomentState(v=vec, k_e=k_e, k_i=k_i))

    g = res_at(v)
    iterations = 0
    converged = np.max(np.abs(g)) < tol
    while not converged:
        if iterations >= max_iter:
            raise NoConvergence("no balance root after %d iterations "
                                "(|residual| = %g)" % (max_iter, np.max(np.abs(g))))
        jac = ev.jacobian(MomentState(v=v, k_e=k_e, k_i=k_i))
        try:
            step = np.linalg.solve(jac, -g)
        except np.linalg.LinAlgError as err:
            raise NoConvergence("singular Jacobian at Newton iterate: %s" % err) from err
        # Armijo backtracking on the squared residual norm.
        base = float(g @ g)
        lam = 1.0
        while True:
            trial = v + lam * step
            g_trial = res_at(trial)
            if float(g_trial @ g_trial) <= (1.0 - 1e-4 * lam) * base or lam < 1e-12:
                break
            lam *= 0.5
        if lam < 1e-12:
            raise NoConvergence("Newton step underflow (|residual| = %g)"
                                % np.max(np.abs(g)))
        v, g = trial, g_trial
        iterations += 1
        converged = np.max(np.abs(g)) < tol

    jac = ev.jacobian(MomentState(v=v, k_e=k_e, k_i=k_i))
    margin = stability_margin(jac)
    report = BalanceReport(residual=g, jacobian=jac, stability_margin=margin,
                           converged=True, iterations=iterations, root=v)
    if margin >= -STABILITY_TOL:
        raise UnstableRoot("balance root found but not strictly stable "
                           "(margin = %g)" % margin, report=report)
    return v, report
