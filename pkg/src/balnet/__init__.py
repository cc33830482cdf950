"""balnet: simulation and verification toolkit for balanced
excitatory/inhibitory stochastic networks.

Three legs, sharing the same model types:

* a particle integrator for the coupled network SDE with sqrt(n)-strong
  finite-rank interactions (``particles``),
* a deterministic kinetic-limit solver that evolves the mean fields on the
  balance constraint while the fluctuation variances relax (``balance``,
  ``limit``),
* quantitative comparison of the two as the network grows (``analysis``).

The ``balnet`` command line runs bundled or user scenarios end to end.
"""

from .analysis import (ComparisonReport, Tolerances, compare,
                       distance_to_limit, dominant_frequency, peak_frequency,
                       wasserstein1d)
from .balance import (BalanceReport, MomentState, jacobian, mean_rhs,
                      residual, solve_balance, stability_margin)
from .config import ScenarioConfig, load_preset, parse_config, preset_names
from .errors import (BalnetError, BlowUp, DimensionMismatch, EigenFailure,
                     EmptySample, GridMismatch, InvalidInitialState,
                     NegativeVariance, NoConvergence, NonPositiveVariance,
                     ParseError, SingularJacobian, SingularProjection,
                     TooFewSamples, UnstableRoot, ValidationError)
from .limit import LimitTrajectory, covariance_at, integrate_limit
from .model import (ConnectivityKernel, GainSpec, GainTable,
                    IntrinsicDynamics, NetworkModel, ProjectionWorkspace,
                    SpatialBasis, build_projection, decompose, eval_basis)
from .particles import (InitialLaw, NoiseSource, ObservableSeries,
                        ParticleEnsemble, SimConfig, em_step,
                        interaction_drift, sample_initial, simulate)
from .quadrature import (GaussHermiteRule, GaussianLaw, density, expect,
                         expect_moment_weighted)

__version__ = "0.1.0"
