"""Sample-path large deviations for random walks and compound Poisson processes."""

from .errors import (BadPartition, ConfigError, LdpathError, NegativeTime, NonzeroOrigin,
                     NotCentered, OutOfDomain, UnsortedInput, WindowMismatch, WrongKind)
from .laws import (CompoundPoisson, Law, LegendreTransform, catalog, law_from_spec, legendre)
from .metrics import (MetricResult, rho_borovkov, rho_borovkov_paths, rho_compact, rho_hat,
                      rho_uniform, rho_weighted)
from .pathspace import BVPath, decompose, evaluate, graph, make_path
from .ratefn import (CrossingRate, RateValue, crossing_rate, growth_bound_check, j,
                     j0u, j_partition_oracle, truncate_overshoot)

__version__ = "0.1.0"
