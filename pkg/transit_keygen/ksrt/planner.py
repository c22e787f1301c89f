# -----------------------------------------------------------------------------
# Copyright (c) 2024 The transit_keygen developers
#
# This program is free software; you can redistribute it and/or
# modify it under the terms of the GNU General Public License
# as published by the Free Software Foundation; either version 2
# of the License, or (at your option) any later version.
#
# This program is distributed in the hope that it will be useful,
# but WITHOUT ANY WARRANTY; without even the implied warranty of
# MERCHANTABILITY or FITNESS FOR A PARTICULAR PURPOSE.  See the
# GNU General Public License for more details.
#
# You should have received a copy of the GNU General Public License
# along with this program; if not, write to the
# Free Software Foundation, Inc., 51 Franklin Street, Fifth Floor,
# Boston, MA  02110-1301, USA.
# -----------------------------------------------------------------------------

"""Adaptive choice of reconciliation depth and privacy amplification.

Both endpoints run these functions on the same public parity statistics,
so they reach the same plan without negotiating it.
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Optional

from transit_keygen.const import DEFAULT_BLOCK_SIZE_CAP
from transit_keygen.const import DEFAULT_EVE_BER_FLOOR
from transit_keygen.const import DEFAULT_FINAL_BER
from transit_keygen.const import DEFAULT_ITERATION_CAP
from transit_keygen.const import DEFAULT_LEAKAGE_BUDGET
from transit_keygen.const import DEFAULT_Z
from transit_keygen.ksrt import stats as kernels
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import PlanMismatchError
from transit_keygen.ksrt.errors import PlanningError
from transit_keygen.ksrt.errors import SecrecyImpossibleError
from transit_keygen.ksrt.stats import BerInterval

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class PlannerConfig:
    eve_ber_floor: float = DEFAULT_EVE_BER_FLOOR
    final_key_ber_target: float = DEFAULT_FINAL_BER
    per_bit_leakage_budget: float = DEFAULT_LEAKAGE_BUDGET
    z: float = DEFAULT_Z
    iteration_cap: int = DEFAULT_ITERATION_CAP
    block_size_cap: int = DEFAULT_BLOCK_SIZE_CAP

    def __post_init__(self):
        for name in ('eve_ber_floor', 'final_key_ber_target'):
            value = getattr(self, name)
            if not (0.0 < value < 0.5):
                raise DomainError(f'{name} must be in (0, 0.5): {value!r}')
        if self.per_bit_leakage_budget <= 0:
            raise DomainError('per_bit_leakage_budget must be positive')
        if self.z <= 0:
            raise DomainError('z must be positive')
        if not (1 <= self.iteration_cap <= 255):
            raise DomainError('iteration_cap must be in [1, 255]')
        if self.block_size_cap < 1:
            raise DomainError('block_size_cap must be at least 1')


class IterationCount(int):
    """Iteration count that remembers whether it hit the cap."""

    def __new__(cls, value, capped=False):
        obj = super().__new__(cls, value)
        obj.capped = capped
        return(obj)

    def __repr__(self):
        return(f'{int(self)}{"+" if self.capped else ""}')


@dataclass(frozen=True)
class ReconciliationPlan:
    total_iterations: int
    pa_block_size: int
    ir_target_ber: float
    predicted_secrecy_bound: float
    channel_ber: Optional[BerInterval] = field(default=None, compare=False)

    def __post_init__(self):
        if self.total_iterations < 0:
            raise DomainError('total_iterations must be non-negative')
        if self.pa_block_size < 1:
            raise DomainError('pa_block_size must be at least 1')

    @property
    def committed_fields(self):
        return((self.total_iterations, self.pa_block_size,
                self.ir_target_ber, self.predicted_secrecy_bound))


def iterations_needed(e, target, cap=DEFAULT_ITERATION_CAP):
    if not (0.0 <= e <= 0.5):
        raise DomainError(f'e must be in [0, 0.5]: {e!r}')
    if not (0.0 < target < 0.5):
        raise DomainError(f'target must be in (0, 0.5): {target!r}')
    n = 0
    while e > target:
        if n >= cap:
            return(IterationCount(cap, capped=True))
        e = kernels.pair_iteration_ber(e)
        n += 1
    return(IterationCount(n))


def iteration_interval(ber, target, cap=DEFAULT_ITERATION_CAP):
    return((iterations_needed(ber.lo, target, cap),
            iterations_needed(ber.hi, target, cap)))


def commit_rule(interval):
    """Committed total iteration count, or None while the interval spans
    more than two values."""
    lo, hi = interval
    if hi < lo:
        raise DomainError(f'unordered interval {interval!r}')
    if hi - lo <= 1:
        return(hi)
    return(None)


def choose_block_size(eve_floor, budget, cap=DEFAULT_BLOCK_SIZE_CAP):
    """Smallest XOR block size that leaves the eavesdropper at most
    ``budget`` bits of information per output bit."""
    if not (0.0 < eve_floor <= 0.5):
        raise DomainError(f'eve_floor must be in (0, 0.5]: {eve_floor!r}')
    if budget <= 0:
        raise DomainError(f'budget must be positive: {budget!r}')
    for k in range(1, cap + 1):
        leaked = kernels.bsc_capacity(kernels.eve_parity_error(eve_floor, k))
        if leaked <= budget:
            return(k)
    raise PlanningError(f'no block size up to {cap} brings eavesdropper '
                        f'information below {budget} bits at floor '
                        f'{eve_floor}'
                        )


def compensate_ir_target(final_target, k):
    """Per-bit BER the reconciled string needs so that XOR blocks of k
    bits still meet ``final_target``."""
    if not (0.0 < final_target < 0.5):
        raise DomainError(f'final_target must be in (0, 0.5): '
                          f'{final_target!r}')
    if k < 1:
        raise DomainError(f'k must be at least 1: {k!r}')
    return(-math.expm1(math.log1p(-2.0 * final_target) / k) / 2.0)


def estimate_channel_ber(parity_stats):
    """Point estimate of the raw channel BER from the first iteration."""
    first = parity_stats[0]
    if first.pairs < 1:
        raise DomainError('first iteration has no parity pairs')
    return(kernels.invert_parity_mismatch(first.mismatch_rate))


def pooled_ber_interval(parity_stats, z=DEFAULT_Z):
    """Confidence interval on the raw channel BER from every iteration.

    Iteration j measures the BER after j pair iterations; each interval is
    carried back to the raw channel and the results are intersected. If
    the evidence conflicts, the hull is used instead.
    """
    intervals = []
    for j, stats in enumerate(parity_stats):
        if stats.pairs < 1:
            continue
        measured = kernels.ber_interval_from_parities(stats, z)
        intervals.append(BerInterval(kernels.back_propagate(measured.lo, j),
                                     kernels.back_propagate(measured.hi, j)
                                     ))
    if not intervals:
        raise DomainError('no parity statistics to estimate from')

    lo = max(i.lo for i in intervals)
    hi = min(i.hi for i in intervals)
    if lo > hi:
        logger.debug('Parity evidence conflicts across iterations; using '
                     'the hull of the per-iteration intervals'
                     )
        lo = min(i.lo for i in intervals)
        hi = max(i.hi for i in intervals)
    return(BerInterval(lo, hi))


def secrecy_bound(parity_stats, eavesdropper_ber=None):
    """Secret-key rate ceiling for the estimated channel.

    ``eavesdropper_ber`` is the eavesdropper's measured raw error rate
    against Alice, known only in simulation.
    """
    estimate = estimate_channel_ber(parity_stats)
    if eavesdropper_ber is None:
        return(kernels.secrecy_upper_bound(estimate))
    return(kernels.eavesdropper_secrecy_bound(estimate,
                                              min(eavesdropper_ber, 0.5)))


def assess_secrecy(parity_stats, config, eavesdropper_ber=None):
    """secrecy_bound, refusing sessions that cannot be secret."""
    estimate = estimate_channel_ber(parity_stats)
    bound = secrecy_bound(parity_stats, eavesdropper_ber)
    if bound <= 0.0:
        raise SecrecyImpossibleError(
            f'secrecy impossible: secret-key rate bound is 0 (channel BER '
            f'{estimate:.4f}'
            + ('' if eavesdropper_ber is None
               else f', eavesdropper BER {eavesdropper_ber:.4f}')
            + ')'
            )
    if config.eve_ber_floor >= estimate:
        raise SecrecyImpossibleError(
            f'secrecy impossible: eavesdropper BER floor '
            f'{config.eve_ber_floor} is not below the estimated channel BER '
            f'{estimate:.4f}'
            )
    return(bound)


def make_plan(parity_stats, config, eavesdropper_ber=None):
    """Plan for a session given the parity statistics so far.

    Returns None until the iteration interval has narrowed to two values.
    Iterations already performed count toward the interval's lower end.
    """
    if not parity_stats:
        raise DomainError('at least one iteration of statistics is needed')

    k = choose_block_size(config.eve_ber_floor, config.per_bit_leakage_budget,
                          config.block_size_cap
                          )
    ir_target = compensate_ir_target(config.final_key_ber_target, k)
    ber = pooled_ber_interval(parity_stats, config.z)
    lo, hi = iteration_interval(ber, ir_target, config.iteration_cap)
    done = len(parity_stats)
    total = commit_rule((max(lo, done), max(hi, done)))
    if total is None:
        logger.debug(f'Channel BER in [{ber.lo:.4f}, {ber.hi:.4f}] needs '
                     f'{int(lo)} to {int(hi)} iterations; not committing yet'
                     )
        return(None)
    if hi.capped:
        raise PlanningError(f'channel BER up to {ber.hi:.4f} does not reach '
                            f'{ir_target:.3g} within {config.iteration_cap} '
                            'iterations'
                            )
    bound = secrecy_bound(parity_stats, eavesdropper_ber)
    return(ReconciliationPlan(total_iterations=int(total),
                              pa_block_size=k,
                              ir_target_ber=ir_target,
                              predicted_secrecy_bound=bound,
                              channel_ber=ber,
                              ))


def check_peer_plan(plan, peer_fields):
    if tuple(peer_fields) != plan.committed_fields:
        raise PlanMismatchError(f'peer committed {tuple(peer_fields)!r}, '
                                f'local plan is {plan.committed_fields!r}'
                                )


def predicted_final_ber(channel_ber, plan):
    """Key BER predicted for a plan at the given raw channel BER."""
    e = channel_ber
    for _ in range(plan.total_iterations):
        e = kernels.pair_iteration_ber(e)
    return(kernels.eve_parity_error(e, plan.pa_block_size))


def predicted_eve_information(config, plan):
    """Eavesdropper bits per key bit at the configured BER floor."""
    return(kernels.bsc_capacity(kernels.eve_parity_error(
                                  config.eve_ber_floor, plan.pa_block_size)))

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
