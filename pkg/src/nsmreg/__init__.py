"""Nonlinear set membership regression, nearest neighbors and the partitions linking them."""
from .analysis import (
    ErrorBoundConstants, LipschitzSchedule, SweepReport, check_local_monotonicity,
    error_at, l2_error, sup_error, sweep, transition_mass,
)
from .dataset import (
    AssumptionReport, Dataset, best_lipschitz_on_grid, get_synthetic, load_csv,
    lipschitz_lower_bound, sample_synthetic,
    validate, write_csv,
)
from .fastquery import BiasedIndex, build, linear_scan
from .geometry import DomainBox, GridSpec, NormSpec, make_grid, norm
from .regressors import NnModel, NsmModel, RegionLabel

__version__ = "0.1.0"
