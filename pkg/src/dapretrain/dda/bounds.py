"""Convergence bound and sample sizes for the distributed scheme."""
import math

from ..errors import DomainError
from ..rsg.bounds import _check_D, _check_rde, _ceil, fold_count


def _check_tau(tau):
    if not 0.0 < tau <= 1.0:
        raise DomainError(f"tau must lie in (0, 1], got {tau}")


def dda_bounds(D, D_f, lip, N, B, tau, shape):
    """Optimal constant sub-network step and the resulting gradient bound.

    Returns ``(gamma_b, bound)``; each sub-network trains tau * d_h * d_v
    weights and ``B`` sub-networks share the initial gap ``D_f``.
    """
    _check_tau(tau)
    if B < 1:
        raise DomainError(f"B must be >= 1, got {B}")
    m = tau * shape.n_params
    _check_D(D, N, m, lip)
    gamma = D / (math.sqrt(N) * m ** 0.75)
    D_bar = D_f / (B * D) + D * lip.L ** 2 * lip.L_prime
    return gamma, D_bar * m ** 0.75 / math.sqrt(N)


def dda_sample_size(r, delta, epsilon, t, tau, shape):
    """Meta-iterations ``M`` and instances ``S`` for an (epsilon, delta)-solution."""
    _check_tau(tau)
    _check_rde(r, delta, epsilon, t)
    m = tau * shape.n_params
    return fold_count(r, delta), _ceil(r * m ** 1.5 / (t * epsilon ** 2))
