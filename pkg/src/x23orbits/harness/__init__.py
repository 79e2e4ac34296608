"""End-to-end experiments, configuration and statistics."""
from .config import RunConfig, ConfigError, load_schema
from .orbit import EmpiricalMeasure, BudgetExceeded, orbit_measure, orbit_experiment
from .dual import dual_experiment, siegel_oracle
from .ratio import ratio_experiment
