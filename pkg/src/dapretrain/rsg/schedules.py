"""Step-size schedules and the randomized stopping distribution they induce."""
import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import DomainError, ScheduleError


@dataclass(frozen=True)
class StepSchedule:
    """Step sizes gamma^1, gamma^2, ...

    kinds:
      ``constant``          gamma^k = gamma
      ``constant_optimal``  gamma^k = D / (sqrt(N) (d_h d_v)^(3/4)); ``horizon``
                            fixes N, otherwise the run length is used
      ``polynomial``        gamma^k = gamma / k^p
      ``sequence``          explicit values, for diagnostics
    """

    kind: str
    gamma: float = 0.0
    D: float = 1.0
    p: float = 1.0
    horizon: int = None
    values: tuple = field(default=())

    @classmethod
    def constant(cls, gamma):
        return cls("constant", gamma=float(gamma))

    @classmethod
    def constant_optimal(cls, D, horizon=None):
        return cls("constant_optimal", D=float(D), horizon=horizon)

    @classmethod
    def polynomial(cls, gamma1, p):
        return cls("polynomial", gamma=float(gamma1), p=float(p))

    @classmethod
    def sequence(cls, values):
        return cls("sequence", values=tuple(float(v) for v in values))

    def steps(self, n, shape):
        """Array of the first ``n`` step sizes for a network of ``shape``."""
        n = int(n)
        if n < 1:
            raise DomainError(f"need at least one iteration, got {n}")
        if self.kind == "constant":
            return np.full(n, self.gamma)
        if self.kind == "constant_optimal":
            horizon = self.horizon or n
            return np.full(n, optimal_step(self.D, horizon, shape.n_params))
        if self.kind == "polynomial":
            return self.gamma / np.arange(1, n + 1, dtype=np.float64) ** self.p
        if self.kind == "sequence":
            if n > len(self.values):
                raise ScheduleError(f"explicit schedule has {len(self.values)} steps, {n} requested")
            return np.asarray(self.values[:n], dtype=np.float64)
        raise ScheduleError(f"unknown schedule kind {self.kind!r}")

    def sums_diverge(self):
        """Analytic (sum gamma = inf, sum gamma^2 < inf) classification.

        ``None`` for explicit finite sequences, where the limit is undefined.
        """
        if self.kind in ("constant", "constant_optimal"):
            return True, False
        if self.kind == "polynomial":
            return self.p <= 1.0, self.p > 0.5
        return None, None


def optimal_step(D, N, n_params):
    return D / (math.sqrt(N) * n_params ** 0.75)


def curvature(lip, shape):
    """L' sqrt(d_h d_v), the Lipschitz constant of the full gradient."""
    return lip.L_prime * math.sqrt(shape.n_params)


def stopping_weights(gammas, c):
    return 2.0 * gammas - c * gammas * gammas


@dataclass(frozen=True)
class StoppingDistribution:
    """P(R = k) for k = 1..N, stored 0-based."""

    probabilities: np.ndarray

    @property
    def N(self):
        return self.probabilities.shape[0]

    @classmethod
    def point_mass(cls, k, N):
        p = np.zeros(N)
        p[k - 1] = 1.0
        return cls(p)

    @classmethod
    def uniform(cls, N):
        return cls(np.full(N, 1.0 / N))


def make_stopping_distribution(schedule, N, lip, shape):
    gammas = schedule.steps(N, shape)
    w = stopping_weights(gammas, curvature(lip, shape))
    bad = np.flatnonzero(~(w > 0.0))
    if bad.size:
        k = int(bad[0]) + 1
        raise ScheduleError(
            f"stopping weight at iteration {k} is {w[k - 1]:.6g}; need gamma^k < 2/(L' sqrt(d_h d_v))"
        )
    if np.all(w == w[0]):
        return StoppingDistribution.uniform(N)
    return StoppingDistribution(w / w.sum())


def sample_stopping_iteration(dist, rng, size=None):
    """Draw R (1-based) by inverting the cumulative distribution."""
    cdf = np.cumsum(dist.probabilities)
    u = rng.random(size)
    r = np.minimum(np.searchsorted(cdf, u * cdf[-1], side="right"), dist.N - 1) + 1
    return int(r) if size is None else r


@dataclass
class ScheduleReport:
    nonincreasing: bool
    first_step_below_monotone_threshold: bool
    stopping_weights_positive: bool
    step_sum_diverges: bool
    square_sum_converges: bool

    @property
    def checks(self):
        return {
            "nonincreasing": self.nonincreasing,
            "first_step_below_monotone_threshold": self.first_step_below_monotone_threshold,
            "stopping_weights_positive": self.stopping_weights_positive,
            "step_sum_diverges": self.step_sum_diverges,
            "square_sum_converges": self.square_sum_converges,
        }

    @property
    def passed(self):
        return all(v is True for v in self.checks.values())

    def lines(self):
        out = []
        for name, ok in self.checks.items():
            status = "n/a" if ok is None else ("pass" if ok else "fail")
            out.append(f"{name}: {status}")
        return out


def validate_schedule(schedule, N, lip, shape):
    gammas = schedule.steps(N, shape)
    c = curvature(lip, shape)
    diverges, converges = schedule.sums_diverge()
    return ScheduleReport(
        nonincreasing=bool(np.all(np.diff(gammas) <= 0.0)),
        first_step_below_monotone_threshold=bool(gammas[0] * c < 1.0),
        stopping_weights_positive=bool(np.all(stopping_weights(gammas, c) > 0.0)),
        step_sum_diverges=diverges,
        square_sum_converges=converges,
    )


def check_steps_valid(gammas, c):
    """Raise unless every step keeps its stopping weight positive."""
    bad = np.flatnonzero(~(gammas * c < 2.0))
    if bad.size:
        k = int(bad[0]) + 1
        raise ScheduleError(f"step at iteration {k} is {gammas[k - 1]:.6g} >= 2/(L' sqrt(d_h d_v)) = {2.0 / c:.6g}")
