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

"""One endpoint's run from round-trip samples to a verified key."""

import json
import logging
import time
from dataclasses import dataclass, field
from typing import List, Optional

from transit_keygen.ksrt import planner
from transit_keygen.ksrt import stats as kernels
from transit_keygen.ksrt import wire
from transit_keygen.ksrt.errors import DesyncError
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import KeyMaterialError
from transit_keygen.ksrt.errors import PlanningError
from transit_keygen.ksrt.errors import TranscriptError
from transit_keygen.ksrt.extraction import DiscardSet
from transit_keygen.ksrt.extraction import SampleStatus
from transit_keygen.ksrt.extraction import apply_discards
from transit_keygen.ksrt.extraction import extract_aligned_bits
from transit_keygen.ksrt.extraction import extract_bits
from transit_keygen.ksrt.extraction import local_discards
from transit_keygen.ksrt.privacyamp import make_final_key
from transit_keygen.ksrt.privacyamp import verify_key
from transit_keygen.ksrt.reconcile import ReconciliationTranscript
from transit_keygen.ksrt.reconcile import run_iteration
from transit_keygen.ksrt.stats import ParityStats

logger = logging.getLogger(__name__)

TRANSCRIPT_SIMULATE = 'simulate'
TRANSCRIPT_LIVE = 'live'
TRANSCRIPT_KINDS = [TRANSCRIPT_SIMULATE, TRANSCRIPT_LIVE]
TRANSCRIPT_VERSION = 1


def _is_rate(value):
    # None marks an iteration that left no bits
    if value is None:
        return(True)
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        return(False)
    return(0.0 <= value <= 1.0)


@dataclass
class SessionReport:
    role: str
    rounds: int = 0
    local_drops: int = 0
    union_discards: int = 0
    tie_discards: int = 0
    aligned_bits: int = 0
    parity_stats: List[ParityStats] = field(default_factory=list)
    plan: Optional[planner.ReconciliationPlan] = None
    reconciled_bits: int = 0
    final_length: int = 0
    elapsed_s: float = 0.0
    secrecy_bound: Optional[float] = None
    predicted_key_ber: Optional[float] = None
    eve_bits_per_key_bit: Optional[float] = None

    @property
    def key_rate(self):
        """Final key bits per minute of session time"""
        if self.elapsed_s <= 0:
            return(0.0)
        return(self.final_length * 60.0 / self.elapsed_s)

    def shared_statistics(self):
        """Statistics both endpoints of a session must agree on"""
        return({'rounds': self.rounds,
                'union_discards': self.union_discards,
                'tie_discards': self.tie_discards,
                'aligned_bits': self.aligned_bits,
                'parity_stats': [(s.mismatches, s.pairs)
                                 for s in self.parity_stats],
                'plan': (self.plan.committed_fields
                         if self.plan is not None else None),
                'final_length': self.final_length,
                })

    def rows(self):
        """(statistic, value) pairs for the CSV and console reports"""
        rows = [('role', self.role),
                ('rounds', self.rounds),
                ('local_drops', self.local_drops),
                ('union_discards', self.union_discards),
                ('tie_discards', self.tie_discards),
                ('aligned_bits', self.aligned_bits),
                ]
        for i, s in enumerate(self.parity_stats):
            rows.append((f'iteration_{i}_mismatches', s.mismatches))
            rows.append((f'iteration_{i}_pairs', s.pairs))
        if self.plan is not None:
            rows.extend([('total_iterations', self.plan.total_iterations),
                         ('pa_block_size', self.plan.pa_block_size),
                         ('ir_target_ber', f'{self.plan.ir_target_ber:.6g}'),
                         ])
        if self.predicted_key_ber is not None:
            rows.extend([('predicted_key_ber',
                          f'{self.predicted_key_ber:.3g}'),
                         ('eve_bits_per_key_bit',
                          f'{self.eve_bits_per_key_bit:.3g}'),
                         ])
        rows.extend([('reconciled_bits', self.reconciled_bits),
                     ('final_length', self.final_length),
                     ('elapsed_s', f'{self.elapsed_s:.3f}'),
                     ('key_rate_bits_per_minute', f'{self.key_rate:.3f}'),
                     ])
        if self.secrecy_bound is not None:
            rows.append(('secrecy_upper_bound', f'{self.secrecy_bound:.6f}'))
        return(rows)


@dataclass
class SessionTranscript:
    """Public record of one session, as read by the analyze mode.

    A simulate transcript also carries ground truth: ``ber_ab`` and
    ``ber_eve`` are indexed by iteration, 0 being the raw bits.
    """
    kind: str
    parity_stats: List[ParityStats]
    ber_ab: Optional[List[Optional[float]]] = None
    ber_eve: Optional[List[Optional[float]]] = None
    plan: Optional[tuple] = None
    session_id: Optional[str] = None

    @classmethod
    def simulated(cls, record, ber_ab, ber_eve=None, plan=None,
                  session_id=None):
        return(cls(TRANSCRIPT_SIMULATE, list(record.stats), list(ber_ab),
                   list(ber_eve) if ber_eve is not None else None,
                   plan, session_id
                   ))

    @classmethod
    def live(cls, record, plan=None, session_id=None):
        return(cls(TRANSCRIPT_LIVE, list(record.stats), plan=plan,
                   session_id=session_id))

    def to_dict(self):
        data = {'version': TRANSCRIPT_VERSION,
                'kind': self.kind,
                'session_id': self.session_id,
                'iterations': [{'mismatches': s.mismatches, 'pairs': s.pairs}
                               for s in self.parity_stats],
                'plan': list(self.plan) if self.plan is not None else None,
                }
        if self.kind == TRANSCRIPT_SIMULATE:
            data['ber_ab'] = self.ber_ab
            data['ber_eve'] = self.ber_eve
        return(data)

    def dump(self, path):
        with open(path, 'w', encoding='utf-8') as f:
            json.dump(self.to_dict(), f, indent=2)
            f.write('\n')

    @classmethod
    def from_dict(cls, data):
        try:
            kind = data['kind']
            if kind not in TRANSCRIPT_KINDS:
                raise TranscriptError(f'unknown transcript kind: {kind!r}')
            parity_stats = [ParityStats(int(i['mismatches']), int(i['pairs']))
                            for i in data['iterations']]
            ber_ab = data.get('ber_ab')
            ber_eve = data.get('ber_eve')
            plan = data.get('plan')
            plan = tuple(plan) if plan is not None else None
        except (KeyError, TypeError, ValueError) as e:
            raise TranscriptError(f'malformed transcript: {e!r}')
        transcript = cls(kind, parity_stats, ber_ab, ber_eve, plan,
                         data.get('session_id'))
        transcript.validate()
        return(transcript)

    @classmethod
    def load(cls, path):
        try:
            with open(path, encoding='utf-8') as f:
                data = json.load(f)
        except OSError as e:
            raise TranscriptError(f'cannot read transcript: {e}')
        except ValueError as e:
            raise TranscriptError(f'malformed transcript: {e}')
        if not isinstance(data, dict):
            raise TranscriptError('malformed transcript: not an object')
        return(cls.from_dict(data))

    def validate(self):
        if not self.parity_stats:
            raise TranscriptError('empty transcript: no reconciliation '
                                  'iterations')
        rows = len(self.parity_stats) + 1
        if self.kind == TRANSCRIPT_SIMULATE:
            for name in ('ber_ab', 'ber_eve'):
                values = getattr(self, name)
                if values is None and name == 'ber_eve':
                    continue
                if not isinstance(values, list) or len(values) != rows:
                    raise TranscriptError(f'{name} needs {rows} entries, '
                                          'one per iteration and the raw '
                                          'bits')
                for i, value in enumerate(values):
                    if not _is_rate(value):
                        raise TranscriptError(f'{name}[{i}] is not a bit '
                                              f'error rate: {value!r}')

    @property
    def has_eve(self):
        return(self.kind == TRANSCRIPT_SIMULATE and self.ber_eve is not None)

    def analysis_rows(self):
        """(iteration, ber_ab[, ber_eve]) rows, iteration 0 being raw.

        A live transcript has no ground truth, so ber_ab is estimated: row
        j from iteration j's parity mismatch rate, and the last row from
        the pair-iteration recursion on the one before.
        """
        self.validate()
        if self.kind == TRANSCRIPT_SIMULATE:
            if self.has_eve:
                return([(i, ab, eve) for i, (ab, eve) in
                        enumerate(zip(self.ber_ab, self.ber_eve))])
            return([(i, ab) for i, ab in enumerate(self.ber_ab)])
        estimates = [kernels.invert_parity_mismatch(s.mismatch_rate)
                     for s in self.parity_stats]
        estimates.append(kernels.pair_iteration_ber(estimates[-1]))
        return([(i, e) for i, e in enumerate(estimates)])


class KeyAgreementSession:
    """Lock-step protocol after the rally, for one endpoint.

    Both endpoints run the same sequence over a FramedChannel: discard
    exchange, extraction, tie exchange, reconciliation iterations until
    the plan is committed and completed, privacy amplification and digest
    confirmation. Any failure wipes every bit string the session holds.
    """

    def __init__(self, session_id, channel, config, eavesdropper_ber=None):
        self.session_id = session_id
        self.channel = channel
        self.config = config
        self.eavesdropper_ber = eavesdropper_ber
        self.role = 'initiator' if channel.initiator else 'responder'
        self.report = SessionReport(self.role)
        self.record = None
        self._held = []

    def _hold(self, bits):
        self._held.append(bits)
        return(bits)

    def _exchange_discards(self, discards, rounds):
        reply = self.channel.exchange(wire.discard_set_frame(discards))
        try:
            peer = DiscardSet.of(wire.parse_discard_set(reply), rounds)
        except DomainError as e:
            raise DesyncError(f'protocol desynchronization: {e}')
        return(discards | peer)

    def run(self, samples, started_at=None):
        """Returns the verified FinalKey; ``samples`` is this endpoint's
        RttSeries from the rally."""
        started_at = time.monotonic() if started_at is None else started_at
        try:
            key = self._run(samples)
        except BaseException as e:
            for bits in self._held:
                bits.wipe()
            logger.warning(f'Session aborted ({self.role}): {e}')
            raise
        finally:
            self.report.elapsed_s = time.monotonic() - started_at
        for bits in self._held:
            bits.wipe()
        return(key)

    def _run(self, samples):
        report = self.report
        report.rounds = len(samples)
        local = local_discards(samples)
        report.local_drops = int(
            (samples.status == SampleStatus.TIMED_OUT).sum())

        union = self._exchange_discards(local, len(samples))
        survivors = apply_discards(samples, union)
        report.union_discards = len(union)
        logger.debug(f'{len(local)} local and {len(union)} combined '
                     f'discards, {len(survivors)} samples survive'
                     )

        raw, ties = extract_bits(survivors)
        self._hold(raw)
        tie_union = self._exchange_discards(ties, len(samples))
        bits = self._hold(extract_aligned_bits(survivors, tie_union))
        report.tie_discards = len(tie_union)
        report.aligned_bits = bits.length

        self.record = ReconciliationTranscript(bits.length)
        plan = None
        while plan is None or self.record.iterations < plan.total_iterations:
            if bits.length < 2:
                raise KeyMaterialError(f'{bits.length} bits left after '
                                       f'{self.record.iterations} iterations'
                                       )
            result, local_par, remote_par = run_iteration(
                                              bits, self.channel,
                                              self.record.iterations)
            self.record.record(result, local_par, remote_par)
            bits = self._hold(result.kept)
            report.parity_stats = list(self.record.stats)

            if self.record.iterations == 1:
                report.secrecy_bound = planner.assess_secrecy(
                                         self.record.stats, self.config,
                                         self.eavesdropper_ber)
            if plan is None:
                plan = planner.make_plan(self.record.stats, self.config,
                                         self.eavesdropper_ber)
                if plan is not None:
                    self._commit(plan)
                elif self.record.iterations >= self.config.iteration_cap:
                    raise PlanningError(f'no plan after '
                                        f'{self.record.iterations} '
                                        'iterations')
        report.plan = plan
        report.reconciled_bits = bits.length

        final = make_final_key(bits, plan.pa_block_size, self.session_id)
        self._hold(final.key)
        if final.key.length == 0:
            raise KeyMaterialError(f'{bits.length} reconciled bits do not '
                                   f'fill one block of '
                                   f'{plan.pa_block_size}'
                                   )
        reply = self.channel.exchange(wire.key_digest_frame(final.digest))
        verify_key(final, wire.parse_key_digest(reply))
        report.final_length = final.key.length
        logger.info(f'Session complete ({self.role}): {final.key.length} '
                    f'key bits from {report.aligned_bits} aligned bits'
                    )
        # The caller owns the key from here
        self._held = [b for b in self._held if b is not final.key]
        return(final)

    def _commit(self, plan):
        reply = self.channel.exchange(wire.plan_commit_frame(plan))
        planner.check_peer_plan(plan, wire.parse_plan_commit(reply))
        self.report.predicted_key_ber = planner.predicted_final_ber(
                                          plan.channel_ber.hi, plan)
        self.report.eve_bits_per_key_bit = planner.predicted_eve_information(
                                             self.config, plan)
        logger.debug(f'Plan committed: {plan.total_iterations} iterations, '
                     f'block size {plan.pa_block_size}'
                     )

    def transcript(self, ber_ab=None, ber_eve=None):
        if self.record is None:
            raise TranscriptError('session produced no transcript')
        plan = (self.report.plan.committed_fields
                if self.report.plan is not None else None)
        session_id = self.session_id.hex()
        if ber_ab is not None:
            return(SessionTranscript.simulated(self.record, ber_ab, ber_eve,
                                               plan, session_id))
        return(SessionTranscript.live(self.record, plan, session_id))

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
