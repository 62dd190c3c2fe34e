"""Nielsen and Fubini-Study complexity of the transverse XY chain after a
sudden quench, with the Loschmidt echo, information metric, geodesics and
finite-size scaling."""

from .core import (FiniteChain, ModelParams, QuenchSpec, ThermoLimit, bogoliubov_angle,
                   brillouin_average, dispersion, momentum_modes)
from .errors import (ConfigError, DerivativeStencilFailure, GaplessMode, InsufficientData,
                     InvalidLimit, NonMonotone, NoRealVelocity, QuadratureFailure,
                     ResonanceClamped, SingularMetric, UnsupportedRegime, XYQuenchError)
from .geodesics import (GeodesicSolution, MetricField, christoffel, geodesic_shoot,
                        larget_field, numeric_field, smalltime_field, tau_of_h)
from .geometry import (Metric2D, MetricDecomposition, ModeState, full_state_metric,
                       ground_metric, mode_state, qgt_mode, qim_closed, qim_dephased, qim_sum)
from .quench import (TimeSeries, larget_limit, larget_series, loschmidt, modulation,
                     modulation_profile, nielsen_quench, omega_angle, oscillation_envelope,
                     quench_observables, smalltime_series, time_series)
from .scaling import (CriticalApproach, ScalingRun, critical_approach, dcn_dparam,
                      scaling_fit, scaling_run)
from .static import (TriangleMap, nielsen_series, nielsen_static, triangle_defect,
                     triangle_map, triangle_series)

__version__ = "0.1.0"
