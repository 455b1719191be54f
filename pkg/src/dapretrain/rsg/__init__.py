from .bounds import (
    SampleSizeReport,
    convergence_bound,
    expected_gradient_bound,
    expected_gradient_curve,
    fold_count,
    ideal_D,
    min_sample_size,
    optimal_constant_step,
    sample_size,
)
from .lipschitz import LipschitzEstimate, estimate_lipschitz
from .runner import LastIterate, MinGradTail, RSGRun, SampledStop, rsg_run, sgd_trace
from .schedules import (
    ScheduleReport,
    StepSchedule,
    StoppingDistribution,
    make_stopping_distribution,
    sample_stopping_iteration,
    validate_schedule,
)
from .selection import multi_fold_select
