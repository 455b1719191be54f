from .bounds import dda_bounds, dda_sample_size
from .planning import (
    DISJOINT,
    WITH_REPLACEMENT,
    SubDAPlan,
    min_subda_count,
    plan_subdas,
    subda_corruption,
    uncovered_units,
)
from .speedup import SpeedupRow, hardware_workers, measure_speedup
from .training import DistributedResult, ParameterStore, block_stream, run_distributed
