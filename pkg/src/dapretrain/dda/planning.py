"""Decomposition of a DA into sub-networks over subsets of the visible units."""
import math
from dataclasses import dataclass

import numpy as np

from ..autoencoder import NetworkShape
from ..errors import DomainError, InfeasibleError, PlanError
from ..streams import as_generator

DISJOINT = "disjoint_partition"
WITH_REPLACEMENT = "with_replacement"
_MODES = {"disjoint": DISJOINT, DISJOINT: DISJOINT, "replacement": WITH_REPLACEMENT, WITH_REPLACEMENT: WITH_REPLACEMENT}


def subda_corruption(zeta, tau):
    """Sub-network corruption q = 1 - (1 - zeta) / tau.

    Chosen so that a unit is dropped with overall probability
    (1 - tau) + tau * q = zeta.
    """
    if not tau < 1.0:
        raise InfeasibleError(f"need tau < 1, got tau={tau}")
    if not 1.0 - zeta < tau:
        raise InfeasibleError(f"need 1 - zeta < tau, got 1 - zeta = {1.0 - zeta:g} >= tau = {tau:g}")
    return 1.0 - (1.0 - zeta) / tau


def min_subda_count(tau, phi):
    """Smallest B with (1 - tau)^B < phi."""
    if not 0.0 < tau < 1.0:
        raise DomainError(f"tau must lie in (0, 1), got {tau}")
    if not 0.0 < phi < 1.0:
        raise DomainError(f"phi must lie in (0, 1), got {phi}")
    return math.floor(math.log(phi) / math.log(1.0 - tau)) + 1


def block_size(tau, d):
    # tolerance keeps e.g. 0.3 * 10 from rounding up to 4
    return max(1, min(d, math.ceil(tau * d - 1e-9)))


@dataclass(frozen=True)
class SubDAPlan:
    """Sub-network layout for ``M`` meta-iterations.

    ``meta_subsets[m][b]`` lists the visible columns of sub-network ``b`` in
    meta-iteration ``m``, sorted, with the bias column (if any) appended.
    """

    tau: float
    q: float
    B: int
    phi: float
    mode: str
    M: int
    zeta: float
    shape: object
    meta_subsets: tuple

    @property
    def subsets(self):
        return self.meta_subsets[0]

    @property
    def disjoint(self):
        return self.mode == DISJOINT

    def sub_shape(self, m, b):
        return NetworkShape(len(self.meta_subsets[m][b]), self.shape.d_h, self.shape.bias)


def plan_subdas(shape, zeta, tau, phi=0.01, mode=DISJOINT, M=1, rng=0, B=None, relaxed=False):
    """Draw sub-network subsets for every meta-iteration.

    ``tau = 1`` is the degenerate single-network plan with q = zeta. With
    ``relaxed`` set, a tau at or below 1 - zeta is accepted and q is clamped
    to 0 instead of raising.
    """
    mode = _MODES.get(mode)
    if mode is None:
        raise PlanError(f"unknown mode, expected one of {sorted(_MODES)}")
    if M < 1:
        raise DomainError(f"need at least one meta-iteration, got M={M}")
    if not 0.0 < tau <= 1.0:
        raise DomainError(f"tau must lie in (0, 1], got {tau}")
    if tau == 1.0:
        q = zeta
    elif relaxed and not 1.0 - zeta < tau:
        q = 0.0
    else:
        q = subda_corruption(zeta, tau)
    rng = as_generator(rng)
    d = shape.n_corruptible
    k = block_size(tau, d)
    tail = [shape.d_v - 1] if shape.bias else []

    if mode == WITH_REPLACEMENT and tau < 1.0:
        need = min_subda_count(tau, phi)
        if B is None:
            B = need
        elif B < need:
            raise PlanError(f"B={B} is below the coverage bound {need} for tau={tau}, phi={phi}")

    metas = []
    for _ in range(M):
        if mode == DISJOINT or tau == 1.0:
            perm = rng.permutation(d)
            blocks = [np.sort(perm[s:s + k]) for s in range(0, d, k)]
        else:
            blocks = [np.sort(rng.choice(d, size=k, replace=False)) for _ in range(B)]
        metas.append(tuple(tuple(int(i) for i in blk) + tuple(tail) for blk in blocks))
    return SubDAPlan(
        tau=tau, q=q, B=len(metas[0]), phi=phi, mode=mode, M=M, zeta=zeta, shape=shape,
        meta_subsets=tuple(metas),
    )


def uncovered_units(plan, m=0):
    """Data units (bias excluded) that no sub-network of meta-iteration ``m`` sees."""
    seen = set()
    for sub in plan.meta_subsets[m]:
        seen.update(sub)
    return sorted(set(range(plan.shape.n_corruptible)) - seen)
