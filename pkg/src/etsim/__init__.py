"""etsim: event-triggered distributed parameter estimation over
multi-agent sensor networks.

A library and CLI that simulates a consensus+innovations estimator whose
agents broadcast their estimates only when they drift past a decaying
threshold, together with its time-driven and centralized baselines, and
the analysis tooling (spectral conditions, scaled-decay metrics, Monte
Carlo studies) used to check the scheme's convergence behavior at desk
scale.
"""
from .asymptotics import (AsymptoticCovariance, SpectralCondition,
                          asymptotic_covariance, covariance_by_quadrature,
                          scalar_recursion, spectral_condition)
from .config import MODES, SimConfig, config_from_dict, load_config
from .errors import (CholeskyError, ConfigError, DimensionMismatchError,
                     DomainError, EmptyNetworkError, GraphError,
                     MissingBaselineError, NonFiniteError, NonSymmetricError,
                     NotHurwitzError, NumericalError, ParseError,
                     SelfLoopError, SimulationError, SingularSystemError)
from .estimators import (CentralizedState, DistributedState, centralized_step,
                         centralized_update, distributed_step,
                         distributed_step_stacked, make_distributed_state,
                         run_simulation, time_driven_step)
from .events import AgentCommState, Mailbox, broadcast, evaluate_trigger, transmit_error
from .graph import Network, SpectralData, build_network, is_connected, spectral_data
from .metrics import (BiasStudy, CommunicationStats, MetricsReport,
                      NormalityStudy, ScaledDecay, build_report,
                      centralized_gap, communication_stats, consensus_decay,
                      coupling_term_excess, monte_carlo_bias,
                      monte_carlo_normality, staleness_excess)
from .rng import master_stream, substream
from .schedules import (ConditionReport, ScheduleParams, alpha, beta,
                        threshold, validate)
from .sensing import (Gramian, ObservationSystem, build_observation_system,
                      gramian, sample_measurements, split_measurements)
from .trace import SimTrace

__version__ = "0.1.0"
