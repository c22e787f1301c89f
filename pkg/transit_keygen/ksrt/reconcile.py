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

"""Bit-pair iteration information reconciliation.

Adjacent disjoint pairs are compared by parity. Where both endpoints'
parities agree the first bit of the pair is kept; otherwise the pair is
dropped. A trailing odd bit is always dropped.
"""

import logging
from dataclasses import dataclass, field
from typing import List

import numpy as np

from transit_keygen.ksrt import wire
from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DesyncError
from transit_keygen.ksrt.stats import ParityStats

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class IterationResult:
    kept: BitString
    stats: ParityStats
    iteration_index: int


@dataclass
class ReconciliationTranscript:
    """Public record of a reconciliation run.

    ``parities`` holds the (local, remote) parity vectors of every
    iteration, which is everything an eavesdropper gets to see.
    """
    initial_length: int
    final_length: int = None
    stats: List[ParityStats] = field(default_factory=list)
    parities: List[tuple] = field(default_factory=list)

    def __post_init__(self):
        if self.final_length is None:
            self.final_length = self.initial_length

    def record(self, result, local_par, remote_par):
        if result.kept.length >= self.final_length and self.final_length:
            raise DesyncError('reconciliation did not shorten the key')
        self.stats.append(result.stats)
        self.parities.append((local_par, remote_par))
        self.final_length = result.kept.length

    @property
    def iterations(self):
        return(len(self.stats))


def pair_parities(bits):
    array = bits.array
    pairs = array.size // 2
    return(BitString(array[0:2 * pairs:2] ^ array[1:2 * pairs:2]))


def keep_agreeing(bits, local_par, remote_par, iteration_index=0):
    pairs = bits.length // 2
    if local_par.length != pairs or remote_par.length != pairs:
        raise DesyncError(f'{bits.length} bits need {pairs} parities, got '
                          f'{local_par.length} local and {remote_par.length} '
                          'remote'
                          )
    agree = local_par.array == remote_par.array
    first_bits = bits.array[0:2 * pairs:2]
    kept = BitString(first_bits[agree])
    stats = ParityStats(mismatches=int(pairs - np.count_nonzero(agree)),
                        pairs=pairs
                        )
    return(IterationResult(kept, stats, iteration_index))


def run_iteration(bits, channel, iteration_index=0):
    """One lock-step iteration over a framed channel.

    Returns (IterationResult, local parities, remote parities).
    """
    local_par = pair_parities(bits)
    reply = channel.exchange(wire.parity_vector_frame(iteration_index % 256,
                                                      local_par))
    remote_iteration, remote_par = wire.parse_parity_vector(reply)
    if remote_iteration != iteration_index % 256:
        raise DesyncError(f'peer is at iteration {remote_iteration}, '
                          f'expected {iteration_index}'
                          )
    result = keep_agreeing(bits, local_par, remote_par, iteration_index)
    logger.debug(f'Iteration {iteration_index}: {result.stats.mismatches} of '
                 f'{result.stats.pairs} parities disagree, '
                 f'{result.kept.length} bits kept'
                 )
    return(result, local_par, remote_par)


def reconcile_locally(alice_bits, bob_bits, iterations):
    """Run both sides of the protocol in one place (simulation).

    Returns (alice kept, bob kept, transcript).
    """
    transcript = ReconciliationTranscript(alice_bits.length)
    for i in range(iterations):
        if alice_bits.length < 2:
            break
        par_a = pair_parities(alice_bits)
        par_b = pair_parities(bob_bits)
        result_a = keep_agreeing(alice_bits, par_a, par_b, i)
        result_b = keep_agreeing(bob_bits, par_b, par_a, i)
        transcript.record(result_a, par_a, par_b)
        alice_bits, bob_bits = result_a.kept, result_b.kept
    return(alice_bits, bob_bits, transcript)

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
