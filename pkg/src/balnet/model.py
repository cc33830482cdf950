"""Network domain types: spatial basis, finite-rank connectivity, gains,
intrinsic dynamics, and the projection/fluctuation decomposition.

The connectivity between populations alpha, beta in {e, i} factorizes over a
small basis {h_a} on the spatial domain:

    K_ab(x, x') = sum_{a,b} c[alpha, beta, a, b] * h_a(x) * h_b(x')

which is what makes both the O(n*M) interaction reduction and the
finite-dimensional balance equations possible.  All types here are immutable
after construction and safe to share across threads.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .errors import DimensionMismatch, SingularProjection

POPULATIONS = ("e", "i")

_POP_INDEX = {"e": 0, "i": 1}

_BASIS_FUNCTIONS = ("constant", "cosine", "sine")


def _pop(alpha) -> int:
    if alpha in (0, 1):
        return alpha
    try:
        return _POP_INDEX[alpha]
    except KeyError:
        raise ValueError("population must be 'e' or 'i', got %r" % (alpha,))


@dataclass(frozen=True, eq=False)
class SpatialBasis:
    """Basis functions and neuron placement on the spatial domain.

    domain is either "point" (a single site, constant basis only) or "ring"
    (the circle, positions x_j = 2*pi*j/n for j = 1..n).  functions is an
    ordered tuple drawn from {"constant", "cosine", "sine"}; these are
    mutually orthogonal under the uniform measure, so the Gram matrix is
    diagonal and positive definite.
    """

    domain: str
    functions: tuple = ("constant",)

    def __post_init__(self):
        if self.domain not in ("point", "ring"):
            raise ValueError("domain must be 'point' or 'ring'")
        functions = tuple(self.functions)
        object.__setattr__(self, "functions", functions)
        if len(functions) < 1:
            raise ValueError("need at least one basis function")
        for f in functions:
            if f not in _BASIS_FUNCTIONS:
                raise ValueError("unknown basis function %r" % (f,))
        if len(set(functions)) != len(functions):
            raise ValueError("duplicate basis functions")
        if self.domain == "point" and functions != ("constant",):
            raise ValueError("point domain supports only the constant basis")

    @property
    def size(self) -> int:
        return len(self.functions)

    def eval(self, x) -> np.ndarray:
        """Evaluate all basis functions at x; returns shape x.shape + (M,)."""
        x = np.asarray(x, dtype=float)
        cols = []
        for f in self.functions:
            if f == "constant":
                cols.append(np.ones_like(x))
            elif f == "cosine":
                cols.append(np.cos(x))
            else:
                cols.append(np.sin(x))
        return np.stack(cols, axis=-1)

    def positions(self, n: int) -> np.ndarray:
        """Neuron positions: 2*pi*j/n (j = 1..n) on the ring, 0 at the point."""
        if n < 1:
            raise ValueError("n must be >= 1")
        if self.domain == "point":
            return np.zeros(n)
        return 2.0 * np.pi * np.arange(1, n + 1) / n

    def quad_grid(self, npts: int = 256):
        """Uniform quadrature grid (nodes, weights) for the normalized
        measure on the domain.  On the ring the composite trapezoid rule on
        a periodic function reduces to equal weights 1/npts, which is
        spectrally accurate for trigonometric integrands."""
        if self.domain == "point":
            return np.zeros(1), np.ones(1)
        nodes = 2.0 * np.pi * np.arange(npts) / npts
        return nodes, np.full(npts, 1.0 / npts)

    def gram_diagonal(self) -> np.ndarray:
        """Exact diagonal of the Gram matrix under the uniform measure:
        1 for the constant function, 1/2 for cosine and sine."""
        return np.array([1.0 if f == "constant" else 0.5 for f in self.functions])


def eval_basis(basis: SpatialBasis, x: float) -> np.ndarray:
    """Vector of basis function values h_a(x)."""
    return basis.eval(x)


@dataclass(frozen=True, eq=False)
class ConnectivityKernel:
    """Coefficient tensor c[alpha, beta, a, b] of the finite-rank kernel."""

    coeffs: np.ndarray  # shape (2, 2, M, M)

    def __post_init__(self):
        c = np.asarray(self.coeffs, dtype=float)
        if c.ndim != 4 or c.shape[0] != 2 or c.shape[1] != 2 or c.shape[2] != c.shape[3]:
            raise ValueError("coeffs must have shape (2, 2, M, M)")
        if not np.all(np.isfinite(c)):
            raise ValueError("kernel coefficients must be finite")
        object.__setattr__(self, "coeffs", c)

    @property
    def rank(self) -> int:
        return self.coeffs.shape[2]

    def block(self, alpha, beta) -> np.ndarray:
        """The M x M coefficient matrix for the ordered pair (alpha, beta)."""
        return self.coeffs[_pop(alpha), _pop(beta)]

    def eval(self, alpha, beta, basis: SpatialBasis, x, xp):
        """K_{alpha beta}(x, x') through the factorization."""
        hx = basis.eval(x)
        hxp = basis.eval(xp)
        return np.einsum("...a,ab,...b->...", hx, self.block(alpha, beta), hxp)

    @classmethod
    def from_blocks(cls, c_ee, c_ei, c_ie, c_ii) -> "ConnectivityKernel":
        blocks = [np.atleast_2d(np.asarray(b, dtype=float)) for b in (c_ee, c_ei, c_ie, c_ii)]
        m = blocks[0].shape[0]
        coeffs = np.empty((2, 2, m, m))
        coeffs[0, 0], coeffs[0, 1] = blocks[0], blocks[1]
        coeffs[1, 0], coeffs[1, 1] = blocks[2], blocks[3]
        return cls(coeffs)

    @classmethod
    def diagonal(cls, c_ee, c_ei, c_ie, c_ii) -> "ConnectivityKernel":
        """Diagonal coefficient structure: c[alpha,beta] = diag(entries)."""
        return cls.from_blocks(*(np.diag(np.atleast_1d(np.asarray(c, dtype=float)))
                                 for c in (c_ee, c_ei, c_ie, c_ii)))


@dataclass(frozen=True)
class GainSpec:
    """Interaction nonlinearity for one ordered population pair.

    kinds: "constant" G(z) = A; "linear" G(z) = C*z;
    "tanh" G(z) = C*tanh(gamma*(z - xi)).
    Values and the first two derivatives are all bounded on bounded sets,
    and the tanh derivatives follow the chain rule exactly.
    """

    kind: str
    a: float = 0.0
    gamma: float = 1.0
    xi: float = 0.0

    def __post_init__(self):
        if self.kind not in ("constant", "linear", "tanh"):
            raise ValueError("unknown gain kind %r" % (self.kind,))

    @classmethod
    def constant(cls, value: float) -> "GainSpec":
        return cls("constant", a=float(value))

    @classmethod
    def linear(cls, slope: float) -> "GainSpec":
        return cls("linear", a=float(slope))

    @classmethod
    def tanh(cls, amplitude: float, gamma: float = 1.0, xi: float = 0.0) -> "GainSpec":
        return cls("tanh", a=float(amplitude), gamma=float(gamma), xi=float(xi))

    def value(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.full_like(z, self.a)
        if self.kind == "linear":
            return self.a * z
        return self.a * np.tanh(self.gamma * (z - self.xi))

    def deriv(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind == "constant":
            return np.zeros_like(z)
        if self.kind == "linear":
            return np.full_like(z, self.a)
        t = np.tanh(self.gamma * (z - self.xi))
        return self.a * self.gamma * (1.0 - t * t)

    def deriv2(self, z):
        z = np.asarray(z, dtype=float)
        if self.kind in ("constant", "linear"):
            return np.zeros_like(z)
        t = np.tanh(self.gamma * (z - self.xi))
        return -2.0 * self.a * self.gamma**2 * t * (1.0 - t * t)


@dataclass(frozen=True)
class GainTable:
    """One GainSpec per ordered pair (alpha, beta)."""

    ee: GainSpec
    ei: GainSpec
    ie: GainSpec
    ii: GainSpec

    def get(self, alpha, beta) -> GainSpec:
        return (self.ee, self.ei, self.ie, self.ii)[2 * _pop(alpha) + _pop(beta)]


@dataclass(frozen=True)
class DriftSpec:
    """Intrinsic drift descriptor.  The limit solver requires linear decay
    -z/tau; the particle integrator also accepts a custom twice-differentiable
    callable via the same descriptor."""

    kind: str
    tau: float = 1.0
    fn: Optional[Callable] = None

    @classmethod
    def linear_decay(cls, tau: float) -> "DriftSpec":
        if tau <= 0:
            raise ValueError("tau must be positive")
        return cls("linear_decay", tau=float(tau))

    @classmethod
    def custom(cls, fn: Callable) -> "DriftSpec":
        return cls("custom", fn=fn)

    @property
    def is_linear_decay(self) -> bool:
        return self.kind == "linear_decay"

    def value(self, z):
        if self.kind == "linear_decay":
            return -np.asarray(z, dtype=float) / self.tau
        return self.fn(np.asarray(z, dtype=float))


@dataclass(frozen=True)
class NoiseSpec:
    """Diffusion coefficient descriptor.  "additive" is a position-constant
    level; a bounded state-dependent callable (x, z) -> sigma is accepted by
    the particle side through "custom" with a declared bound."""

    kind: str
    level: float = 0.0
    fn: Optional[Callable] = None
    bound: float = 0.0

    @classmethod
    def additive(cls, level: float) -> "NoiseSpec":
        if level < 0:
            raise ValueError("noise level must be >= 0")
        return cls("additive", level=float(level), bound=float(level))

    @classmethod
    def custom(cls, fn: Callable, bound: float) -> "NoiseSpec":
        if bound <= 0:
            raise ValueError("a positive uniform bound must be declared")
        return cls("custom", fn=fn, bound=float(bound))

    @property
    def is_additive(self) -> bool:
        return self.kind == "additive"

    def value(self, x, z):
        if self.kind == "additive":
            return np.full_like(np.asarray(z, dtype=float), self.level)
        return self.fn(np.asarray(x, dtype=float), np.asarray(z, dtype=float))


@dataclass(frozen=True)
class IntrinsicDynamics:
    f_e: DriftSpec
    f_i: DriftSpec
    sigma_e: NoiseSpec
    sigma_i: NoiseSpec

    @classmethod
    def linear(cls, tau_e, tau_i, sigma_e, sigma_i) -> "IntrinsicDynamics":
        return cls(DriftSpec.linear_decay(tau_e), DriftSpec.linear_decay(tau_i),
                   NoiseSpec.additive(sigma_e), NoiseSpec.additive(sigma_i))

    def drift(self, alpha) -> DriftSpec:
        return self.f_e if _pop(alpha) == 0 else self.f_i

    def noise(self, alpha) -> NoiseSpec:
        return self.sigma_e if _pop(alpha) == 0 else self.sigma_i

    @property
    def is_gaussian_closable(self) -> bool:
        """Linear decay drift plus additive noise in both populations."""
        return (self.f_e.is_linear_decay and self.f_i.is_linear_decay
                and self.sigma_e.is_additive and self.sigma_i.is_additive)


@dataclass(frozen=True, eq=False)
class NetworkModel:
    """Everything that defines the network except its size and realization."""

    basis: SpatialBasis
    kernel: ConnectivityKernel
    gains: GainTable
    dynamics: IntrinsicDynamics

    def __post_init__(self):
        if self.kernel.rank != self.basis.size:
            raise DimensionMismatch("kernel rank %d != basis size %d"
                                    % (self.kernel.rank, self.basis.size))


@dataclass(frozen=True, eq=False)
class ProjectionWorkspace:
    """Precomputed projection data for one (basis, n) pair.

    Q[p, q] = n^-1 sum_j h_p(x_j) h_q(x_j); basis_values is the n x M table
    h_b(x_j), the structure that turns the pairwise interaction sum into an
    O(n*M) reduction.
    """

    basis: SpatialBasis
    n: int
    positions: np.ndarray
    basis_values: np.ndarray
    q: np.ndarray
    q_inv: np.ndarray


def build_projection(basis: SpatialBasis, n: int) -> ProjectionWorkspace:
    """Build Q, its inverse, and the basis-value table for n neurons.

    Raises SingularProjection when det(Q) <= det(Gram)/2, the standing
    smallness guard for the layout (n too small or degenerate placement).
    Q converges to the Gram matrix of the (unnormalized) basis, so the
    guard is taken relative to it; on the point domain Gram = 1 and this
    is the literal det(Q) > 1/2.
    """
    positions = basis.positions(n)
    basis_values = basis.eval(positions)
    m = basis.size
    q = np.empty((m, m))
    for p in range(m):
        for r in range(p, m):
            q[p, r] = q[r, p] = np.sum(basis_values[:, p] * basis_values[:, r]) / n
    det = np.linalg.det(q)
    guard = 0.5 * float(np.prod(basis.gram_diagonal()))
    if det <= guard:
        raise SingularProjection("det(Q) = %g <= %g for n = %d"
                                 % (det, guard, n))
    q_inv = np.linalg.inv(q)
    if np.max(np.abs(q @ q_inv - np.eye(m))) > 1e-12:
        raise SingularProjection("Q inversion inaccurate for n = %d" % n)
    return ProjectionWorkspace(basis=basis, n=n, positions=positions,
                               basis_values=basis_values, q=q, q_inv=q_inv)


def decompose(workspace: ProjectionWorkspace, states: np.ndarray):
    """Split per-neuron states into basis coefficients and fluctuations.

    v = Q^-1 (n^-1 sum_j z_j h(x_j)),  y_j = z_j - sum_a v_a h_a(x_j).

    The fluctuations satisfy sum_j h_a(x_j) y_j = 0 for every a, and
    z = y + basis_values @ v reconstructs the input exactly.
    """
    z = np.asarray(states, dtype=float)
    if z.shape != (workspace.n,):
        raise DimensionMismatch("expected %d states, got shape %s"
                                % (workspace.n, z.shape))
    bv = workspace.basis_values
    m = workspace.basis.size
    proj = np.empty(m)
    for a in range(m):
        proj[a] = np.sum(bv[:, a] * z) / workspace.n
    v = workspace.q_inv @ proj
    y = z.copy()
    for a in range(m):
        y -= v[a] * bv[:, a]
    return v, y
