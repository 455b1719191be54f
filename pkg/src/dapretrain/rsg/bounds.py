"""Closed-form convergence bounds and sample-size estimates for RSG.

``n_params`` below is the number of trained weights, d_h * d_v for the whole
network and tau * d_h * d_v for one sub-network of the distributed scheme.
"""
import math
from dataclasses import dataclass

import numpy as np

from ..errors import DomainError, ScheduleError
from .schedules import curvature, stopping_weights

# log-ratio slack so that exact integer ratios are not bumped by rounding
_CEIL_SLACK = 1e-12


def _bound_terms(gammas, lip, D_f, n_params):
    c = lip.L_prime * math.sqrt(n_params)
    num = D_f + n_params ** 1.5 * lip.L ** 2 * lip.L_prime * np.cumsum(gammas * gammas)
    den = np.cumsum(stopping_weights(gammas, c))
    return num, den


def expected_gradient_curve(schedule, N, lip, D_f, shape):
    """Bound on E||grad f(W^R)||^2 for every horizon 1..N at once."""
    if D_f < 0:
        raise DomainError(f"D_f must be nonnegative, got {D_f}")
    num, den = _bound_terms(schedule.steps(N, shape), lip, D_f, shape.n_params)
    bad = np.flatnonzero(~(den > 0.0))
    if bad.size:
        raise ScheduleError(f"bound denominator is nonpositive at N={int(bad[0]) + 1}")
    return num / den


def expected_gradient_bound(schedule, N, lip, D_f, shape):
    return float(expected_gradient_curve(schedule, N, lip, D_f, shape)[-1])


def max_D(N, n_params, lip):
    """Largest admissible D for the optimal constant step."""
    return math.sqrt(N) * n_params ** 0.25 / lip.L_prime


def _check_D(D, N, n_params, lip):
    if N < 1:
        raise DomainError(f"N must be >= 1, got {N}")
    if not D > 0:
        raise DomainError(f"D must be positive, got {D}")
    if lip is not None and D > max_D(N, n_params, lip):
        raise DomainError(f"D={D} exceeds sqrt(N) (d_h d_v)^(1/4) / L' = {max_D(N, n_params, lip):.6g}")


def optimal_constant_step(D, N, shape, lip=None):
    _check_D(D, N, shape.n_params, lip)
    return D / (math.sqrt(N) * shape.n_params ** 0.75)


def convergence_bound(D, D_f, lip, N, shape):
    _check_D(D, N, shape.n_params, lip)
    D_bar = D_f / D + D * lip.L ** 2 * lip.L_prime
    return D_bar * shape.n_params ** 0.75 / math.sqrt(N)


def ideal_D(D_f, lip):
    return math.sqrt(D_f / (lip.L ** 2 * lip.L_prime))


def fold_count(r, delta):
    """ceil(log(1/delta) / log(sqrt(r)))."""
    _check_rde(r, delta, 1.0)
    return max(1, math.ceil(math.log(1.0 / delta) / math.log(math.sqrt(r)) - _CEIL_SLACK))


def _check_rde(r, delta, epsilon, t=1.0):
    if not r > 1.0:
        raise DomainError(f"r must exceed 1, got {r}")
    if not 0.0 < delta < 1.0:
        raise DomainError(f"delta must lie in (0, 1), got {delta}")
    if not epsilon > 0.0:
        raise DomainError(f"epsilon must be positive, got {epsilon}")
    if not t >= 1.0:
        raise DomainError(f"t must be >= 1, got {t}")


def _ceil(x):
    return math.ceil(x * (1.0 - _CEIL_SLACK))


@dataclass(frozen=True)
class SampleSizeReport:
    r: float
    delta: float
    epsilon: float
    t: float
    C: int
    S: int
    N_calls: int


def sample_size(r, delta, epsilon, t, shape, n_params=None):
    """Folds, instances and oracle calls per fold for an (epsilon, delta)-solution."""
    _check_rde(r, delta, epsilon, t)
    m = shape.n_params if n_params is None else n_params
    calls = r * m ** 1.5 / epsilon ** 2
    return SampleSizeReport(
        r=r, delta=delta, epsilon=epsilon, t=t,
        C=fold_count(r, delta),
        S=_ceil(calls / t),
        N_calls=_ceil(calls),
    )


def min_sample_size(epsilon, t, shape):
    """The r -> 1 floor of the instance count."""
    return _ceil(shape.n_params ** 1.5 / (t * epsilon ** 2))
