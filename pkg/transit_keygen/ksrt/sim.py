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

"""In-process chain simulator.

A chain is a list of hops between Alice (node 0) and Bob (the last node).
Every traversal of a hop draws an independent delay from that hop's
DelayModel. The eavesdropper sits at a node on the path and timestamps the
probe going out and the echo coming back, each with her own jitter.
"""

import configparser
import dataclasses
import heapq
import itertools
import logging
from dataclasses import dataclass
from typing import Optional, Tuple

import numpy as np

from transit_keygen.const import DEFAULT_EVE_JITTER_FRACTION
from transit_keygen.const import DEFAULT_EVE_POSITION
from transit_keygen.const import DEFAULT_HOPS
from transit_keygen.const import DEFAULT_WAN_SCALE_NS
from transit_keygen.ksrt import reconcile
from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import TranscriptError
from transit_keygen.ksrt.extraction import RttSeries
from transit_keygen.ksrt.extraction import SampleStatus
from transit_keygen.ksrt.extraction import apply_discards
from transit_keygen.ksrt.extraction import extract_aligned_bits
from transit_keygen.ksrt.extraction import extract_bits
from transit_keygen.ksrt.extraction import local_discards
from transit_keygen.ksrt.session import SessionTranscript
from transit_keygen.ksrt.transport import DEFAULT_TIMEOUT_NS

logger = logging.getLogger(__name__)

DELAY_NORMAL = 'normal'
DELAY_LAPLACE = 'laplace'
DELAY_STUDENT_T = 'student_t'
DELAY_SHIFTED_LOGNORMAL = 'shifted_lognormal'
DELAY_CONSTANT = 'constant'
DELAY_KINDS = [DELAY_NORMAL, DELAY_LAPLACE, DELAY_STUDENT_T,
               DELAY_SHIFTED_LOGNORMAL, DELAY_CONSTANT]

DEFAULT_STUDENT_T_SHAPE = 3.0
DEFAULT_LOGNORMAL_SHAPE = 1.0
MIN_MONTE_CARLO_ROUNDS = 1000


@dataclass(frozen=True)
class DelayModel:
    """Delay distribution in nanoseconds.

    ``shape`` is the degrees of freedom for student_t and the log-scale
    sigma for shifted_lognormal; other kinds ignore it.
    """
    kind: str = DELAY_NORMAL
    location_ns: float = 0.0
    scale_ns: float = 0.0
    shape: Optional[float] = None

    def __post_init__(self):
        if self.kind not in DELAY_KINDS:
            raise DomainError(f'unknown delay model kind: {self.kind!r}')
        if self.scale_ns < 0:
            raise DomainError(f'scale_ns must be non-negative: '
                              f'{self.scale_ns!r}')
        if self.shape is not None and self.shape <= 0:
            raise DomainError(f'shape must be positive: {self.shape!r}')

    @property
    def median(self):
        if self.kind == DELAY_SHIFTED_LOGNORMAL:
            # Median of lognormal(0, sigma) is 1
            return(self.location_ns + self.scale_ns)
        return(self.location_ns)

    def sample(self, rng, size, clip=True):
        """Draw ``size`` delays; with ``clip`` every value is at least 1 ns.

        Clipping only matters for models whose location does not keep
        them positive. Jitter models are drawn unclipped.
        """
        if self.kind == DELAY_NORMAL:
            noise = rng.normal(0.0, 1.0, size)
        elif self.kind == DELAY_LAPLACE:
            noise = rng.laplace(0.0, 1.0, size)
        elif self.kind == DELAY_STUDENT_T:
            noise = rng.standard_t(self.shape or DEFAULT_STUDENT_T_SHAPE, size)
        elif self.kind == DELAY_SHIFTED_LOGNORMAL:
            noise = rng.lognormal(0.0, self.shape or DEFAULT_LOGNORMAL_SHAPE,
                                  size)
        else:
            noise = np.zeros(size)
        values = self.location_ns + self.scale_ns * noise
        if clip:
            values = np.maximum(values, 1.0)
        return(values)


def _draw_ns(model, rng, size):
    return(np.rint(model.sample(rng, size)).astype(np.int64))


@dataclass(frozen=True)
class ChainTopology:
    hops: Tuple[DelayModel, ...]
    eve_position: int = DEFAULT_EVE_POSITION
    eve_jitter: DelayModel = DelayModel(DELAY_CONSTANT)
    hop_names: Tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'hops', tuple(self.hops))
        if not self.hops:
            raise DomainError('a chain needs at least one hop')
        if not (0 <= self.eve_position < len(self.hops)):
            raise DomainError(f'eve_position {self.eve_position} is outside '
                              f'a chain of {len(self.hops)} hops'
                              )
        names = tuple(self.hop_names) or tuple(f'hop{i}' for i in
                                               range(len(self.hops)))
        if len(names) != len(self.hops):
            raise DomainError('one name per hop is needed')
        object.__setattr__(self, 'hop_names', names)

    def with_eve(self, position=None, jitter=None):
        changes = {}
        if position is not None:
            changes['eve_position'] = position
        if jitter is not None:
            changes['eve_jitter'] = jitter
        return(dataclasses.replace(self, **changes))


def default_topology(kind=DELAY_NORMAL, jitter_fraction=
                     DEFAULT_EVE_JITTER_FRACTION):
    """Alice and Eve on one low-noise segment, then two long-haul hops to
    Bob. Eve's jitter is ``jitter_fraction`` of the long-haul scale."""
    hops = tuple(DelayModel(kind, location, scale)
                 for _, location, scale in DEFAULT_HOPS)
    jitter = DelayModel(DELAY_NORMAL, 0.0,
                        jitter_fraction * DEFAULT_WAN_SCALE_NS)
    return(ChainTopology(hops, DEFAULT_EVE_POSITION, jitter,
                         tuple(name for name, _, _ in DEFAULT_HOPS)
                         ))


def _model_from_section(section, prefix=''):
    def number(key, fallback):
        value = section.get(prefix + key, fallback=None)
        if value is None or value == '':
            return(fallback)
        try:
            return(float(value))
        except ValueError:
            raise ValueError(f'invalid {prefix}{key} value: {value!r}')

    kind = section.get(prefix + 'kind', fallback=DELAY_NORMAL)
    if kind not in DELAY_KINDS:
        raise ValueError(f'invalid {prefix}kind value: {kind!r}')
    return(DelayModel(kind, number('location_ns', 0.0),
                      number('scale_ns', 0.0), number('shape', None)
                      ))


def load_topology(path):
    """Read a chain from an INI file: ``[hop:NAME]`` sections in path
    order and an optional ``[eve]`` section."""
    config = configparser.ConfigParser()
    if not config.read(path):
        raise ValueError(f'cannot read topology file: {path}')
    hops, names = [], []
    try:
        for section_name in config.sections():
            if section_name.startswith('hop:'):
                names.append(section_name[len('hop:'):])
                hops.append(_model_from_section(config[section_name]))
        eve_position = DEFAULT_EVE_POSITION
        jitter = DelayModel(DELAY_CONSTANT)
        if config.has_section('eve'):
            eve = config['eve']
            eve_position = eve.getint('position', fallback=eve_position)
            jitter = _model_from_section(eve, 'jitter_')
        return(ChainTopology(tuple(hops), eve_position, jitter, tuple(names)))
    except ValueError as e:
        raise ValueError(f'Topology file {path}: {e}')


@dataclass
class EveObservation:
    """The eavesdropper's measured interval for each round.

    ``ok`` is False where she did not see both the probe and its echo.
    """
    interval: np.ndarray
    ok: np.ndarray
    index: np.ndarray

    def __len__(self):
        return(int(self.interval.size))


def eve_bits(observation, survivors, tie_union):
    """Eve's bits for the rounds Alice and Bob kept.

    Eve thresholds at her own median over the rounds that survived the
    discard exchange and then drops the public tie union, which is exactly
    what the endpoints do.
    """
    selected = np.isin(observation.index, survivors.index)
    if not observation.ok[selected].all():
        raise DomainError('eavesdropper missed a round the endpoints kept')
    median = np.median(observation.interval[selected])
    ties = np.fromiter(tie_union, dtype=np.int64, count=len(tie_union))
    keep = selected & ~np.isin(observation.index, ties)
    return(BitString(observation.interval[keep] > median))


def simulate_rallies(topology, rounds, drop_prob=0.0, seed=None,
                     timeout_ns=DEFAULT_TIMEOUT_NS):
    """Vectorized rally over the chain.

    Returns (alice samples, bob samples, EveObservation). Alice's sample i
    is PROBE(i) out plus ECHO(i) back; Bob's sample i is ECHO(i) back plus
    PROBE(i+1) out, where PROBE(i+1) leaves when ECHO(i) arrives or when
    Alice gives up on it.
    """
    if rounds < 1:
        raise DomainError(f'rounds must be at least 1: {rounds!r}')
    if not (0.0 <= drop_prob < 1.0):
        raise DomainError(f'drop_prob must be in [0, 1): {drop_prob!r}')
    rng = np.random.default_rng(seed)
    hop_count = len(topology.hops)
    probe = np.empty((rounds, hop_count), dtype=np.int64)
    echo = np.empty((rounds, hop_count), dtype=np.int64)
    for h, model in enumerate(topology.hops):
        probe[:, h] = _draw_ns(model, rng, rounds)
        echo[:, h] = _draw_ns(model, rng, rounds)
    probe_lost = rng.random(rounds) < drop_prob
    echo_lost = rng.random(rounds) < drop_prob
    jitter_out = topology.eve_jitter.sample(rng, rounds, clip=False)
    jitter_in = topology.eve_jitter.sample(rng, rounds, clip=False)

    probe_sum = probe.sum(axis=1)
    echo_sum = echo.sum(axis=1)
    alice_rtt = probe_sum + echo_sum
    alice_ok = ~probe_lost & ~echo_lost & (alice_rtt <= timeout_ns)
    waited = np.where(alice_ok, alice_rtt, timeout_ns)

    bob_rtt = np.zeros(rounds, dtype=np.int64)
    bob_ok = np.zeros(rounds, dtype=bool)
    bob_rtt[:-1] = waited[:-1] - probe_sum[:-1] + probe_sum[1:]
    bob_ok[:-1] = ~probe_lost[:-1] & ~probe_lost[1:] & (bob_rtt[:-1] > 0)
    bob_status = np.where(bob_ok, SampleStatus.OK, SampleStatus.TIMED_OUT)
    bob_status[-1] = SampleStatus.DISCARDED

    p = topology.eve_position
    eve_interval = (probe[:, p:].sum(axis=1) + echo[:, p:].sum(axis=1)
                    + (jitter_in - jitter_out))

    alice = RttSeries(alice_rtt,
                      np.where(alice_ok, SampleStatus.OK,
                               SampleStatus.TIMED_OUT))
    bob = RttSeries(bob_rtt, bob_status)
    eve = EveObservation(eve_interval, alice_ok.copy(),
                         np.arange(rounds, dtype=np.int64))
    logger.debug(f'Simulated {rounds} rounds: {int((~alice_ok).sum())} lost '
                 f'at Alice, {int((~bob_ok).sum())} at Bob'
                 )
    return(alice, bob, eve)


class SimulatedChain:
    """Discrete-event driver that runs the rally state machines over a
    simulated chain on a virtual nanosecond clock.

    Every datagram is encoded and decoded exactly as on a real socket;
    ``captured`` keeps the bytes of each one sent.
    """

    def __init__(self, topology, drop_prob=0.0, seed=None):
        if not (0.0 <= drop_prob < 1.0):
            raise DomainError(f'drop_prob must be in [0, 1): {drop_prob!r}')
        self.topology = topology
        self.drop_prob = drop_prob
        self.rng = np.random.default_rng(seed)
        self.captured = []
        self._eve_out = {}
        self._eve_in = {}
        self._queue = []
        self._order = itertools.count()
        self.elapsed_ns = 0

    def _transmit(self, packet, now, target):
        data = packet.encode()
        self.captured.append(data)
        delays = np.array([_draw_ns(model, self.rng, 1)[0]
                           for model in self.topology.hops])
        if self.rng.random() < self.drop_prob:
            return
        p = self.topology.eve_position
        jitter = self.topology.eve_jitter.sample(self.rng, 1, clip=False)[0]
        if packet.is_probe:
            self._eve_out.setdefault(packet.seq,
                                     now + int(delays[:p].sum()) + jitter)
        else:
            self._eve_in.setdefault(packet.seq,
                                    now + int(delays[p:].sum()) + jitter)
        heapq.heappush(self._queue, (now + int(delays.sum()),
                                     next(self._order), target, data))

    def run(self, initiator, responder, start_ns=0):
        """Returns (initiator samples, responder samples, EveObservation)."""
        now = start_ns
        responder.start(now)
        while not (initiator.finished and responder.finished):
            for machine, target in ((initiator, responder),
                                    (responder, initiator)):
                packet = machine.poll(now)
                while packet is not None:
                    self._transmit(packet, now, target)
                    machine.sent(packet, now)
                    packet = machine.poll(now)
            if initiator.finished:
                # The initiator opens the framed channel as soon as it is
                # done, which ends the responder's rally.
                if not responder.finished:
                    responder.finish()
                break

            wake = [t for t in (initiator.deadline, initiator.wake_time,
                                responder.deadline) if t is not None]
            if self._queue:
                wake.append(self._queue[0][0])
            now = max(now, min(wake))
            if self._queue and self._queue[0][0] <= now:
                _, _, target, data = heapq.heappop(self._queue)
                if target is responder:
                    responder.received(data, now, 'initiator')
                else:
                    initiator.received(data, now)
            else:
                initiator.expire(now)
                responder.expire(now)

        self.elapsed_ns = now - start_ns
        return(initiator.samples(), responder.samples(),
               self.eve_observation(initiator.rounds))

    def eve_observation(self, rounds):
        interval = np.zeros(rounds, dtype=np.float64)
        ok = np.zeros(rounds, dtype=bool)
        for seq in range(rounds):
            if seq in self._eve_out and seq in self._eve_in:
                interval[seq] = self._eve_in[seq] - self._eve_out[seq]
                ok[seq] = True
        return(EveObservation(interval, ok, np.arange(rounds, dtype=np.int64)))


@dataclass
class GroundTruth:
    """Aligned bit strings as only a simulator can see them."""
    alice: BitString
    bob: BitString
    eve: BitString

    @property
    def ber_ab(self):
        return(self.bob.errors_against(self.alice))

    @property
    def ber_eve(self):
        return(self.eve.errors_against(self.alice))

    def wipe(self):
        for bits in (self.alice, self.bob, self.eve):
            bits.wipe()


def ground_truth(alice_samples, bob_samples, eve):
    """Run both endpoints' discard and extraction steps in one place."""
    union = local_discards(alice_samples) | local_discards(bob_samples)
    alice = apply_discards(alice_samples, union)
    bob = apply_discards(bob_samples, union)
    _, alice_ties = extract_bits(alice)
    _, bob_ties = extract_bits(bob)
    ties = alice_ties | bob_ties
    return(GroundTruth(extract_aligned_bits(alice, ties),
                       extract_aligned_bits(bob, ties),
                       eve_bits(eve, alice, ties)
                       ))


def eve_track_reconciliation(eve, reference, parity_log):
    """Follow the public keep decisions with another party's bits.

    ``parity_log`` is the list of (local, remote) parity vectors of each
    iteration. Returns the BER against ``reference`` before reconciliation
    and after each iteration; None where no bits are left.
    """
    if eve.length != reference.length:
        raise TranscriptError(f'eavesdropper holds {eve.length} bits, the '
                              f'endpoints {reference.length}'
                              )
    bers = [eve.errors_against(reference) if reference.length else None]
    for iteration, (local_par, remote_par) in enumerate(parity_log):
        pairs = reference.length // 2
        if local_par.length != pairs or remote_par.length != pairs:
            raise TranscriptError(f'iteration {iteration} has '
                                  f'{local_par.length} parities for '
                                  f'{reference.length} bits'
                                  )
        agree = local_par.array == remote_par.array
        eve = BitString(eve.array[0:2 * pairs:2][agree])
        reference = BitString(reference.array[0:2 * pairs:2][agree])
        bers.append(eve.errors_against(reference) if reference.length
                    else None)
    return(bers)


def monte_carlo_ber(model, rounds, seed=None):
    """Disagreement rate of T1 + T2 against T2 + T3, each thresholded at
    its own median."""
    if rounds < MIN_MONTE_CARLO_ROUNDS:
        raise DomainError(f'at least {MIN_MONTE_CARLO_ROUNDS} rounds are '
                          f'needed: {rounds!r}'
                          )
    rng = np.random.default_rng(seed)
    t1, t2, t3 = (model.sample(rng, rounds) for _ in range(3))
    a = t1 + t2
    b = t2 + t3
    a_median = np.median(a)
    b_median = np.median(b)
    keep = (a != a_median) & (b != b_median)
    if not keep.any():
        raise DomainError('every sample ties with its median')
    return(float(np.mean((a[keep] > a_median) != (b[keep] > b_median))))


def bsc_transcript(n, e, iterations, seed=None):
    """Simulate-kind transcript for a pair of strings differing by a
    BSC(e), reconciled for ``iterations`` rounds."""
    rng = np.random.default_rng(seed)
    alice = BitString(rng.integers(0, 2, n))
    bob = alice ^ BitString(rng.random(n) < e)
    _, _, record = reconcile.reconcile_locally(alice, bob, iterations)
    return(SessionTranscript.simulated(
             record, eve_track_reconciliation(bob, alice, record.parities)))

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
