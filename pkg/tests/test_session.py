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

import json
import socket
import threading

import pytest

from transit_keygen.const import DEFAULT_ROUNDS
from transit_keygen.ksrt import sim
from transit_keygen.ksrt import transport
from transit_keygen.ksrt import wire
from transit_keygen.ksrt.errors import DesyncError
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import KeyAgreementError
from transit_keygen.ksrt.errors import SecrecyImpossibleError
from transit_keygen.ksrt.errors import TranscriptError
from transit_keygen.ksrt.extraction import DiscardSet
from transit_keygen.ksrt.extraction import RttSeries
from transit_keygen.ksrt.planner import PlannerConfig
from transit_keygen.ksrt.reconcile import ReconciliationTranscript
from transit_keygen.ksrt.session import KeyAgreementSession
from transit_keygen.ksrt.session import SessionReport
from transit_keygen.ksrt.session import SessionTranscript
from transit_keygen.ksrt.stats import ParityStats

SESSION_ID = bytes.fromhex('0123456789abcdef0123456789abcdef')
# A floor of 0.1 keeps blocks short enough for a key from 20000 rounds
CONFIG = PlannerConfig(eve_ber_floor=0.1)


def run_pair(alice_config=CONFIG, bob_config=CONFIG, rounds=20000, seed=1):
    alice_samples, bob_samples, _ = sim.simulate_rallies(
                                      sim.default_topology(), rounds,
                                      seed=seed)
    alice_sock, bob_sock = socket.socketpair()
    for sock in (alice_sock, bob_sock):
        sock.settimeout(30)
    sessions = [KeyAgreementSession(SESSION_ID,
                                    transport.FramedChannel(alice_sock, True),
                                    alice_config),
                KeyAgreementSession(SESSION_ID,
                                    transport.FramedChannel(bob_sock, False),
                                    bob_config)]
    results = [None, None]

    def endpoint(i, samples):
        try:
            results[i] = sessions[i].run(samples)
        except KeyAgreementError as e:
            results[i] = e
            sessions[i].channel.close()

    threads = [threading.Thread(target=endpoint, args=(0, alice_samples)),
               threading.Thread(target=endpoint, args=(1, bob_samples))]
    for thread in threads:
        thread.start()
    for thread in threads:
        thread.join(60)
    for session in sessions:
        session.channel.close()
    return(sessions, results)


class TestKeyAgreementSession:

    def test_matching_keys(self):

        sessions, (alice, bob) = run_pair()
        assert alice.key.length > 0
        assert alice.key == bob.key
        assert alice.digest == bob.digest
        alice_report, bob_report = (s.report for s in sessions)
        assert alice_report.shared_statistics() == \
            bob_report.shared_statistics()
        assert alice_report.final_length == alice.key.length
        assert alice_report.plan.pa_block_size == 15
        assert 0.05 < alice_report.secrecy_bound < 0.15
        assert alice_report.predicted_key_ber <= CONFIG.final_key_ber_target
        assert alice_report.eve_bits_per_key_bit <= \
            CONFIG.per_bit_leakage_budget
        assert bob_report.local_drops == 0
        assert bob_report.union_discards == 1

    def test_frames_in_order(self):

        sessions, _ = run_pair(rounds=5000, seed=2)
        types = [f.type for f in sessions[0].channel.frames_sent]
        assert types[:3] == [0x10, 0x10, 0x11]
        assert 0x12 in types
        assert types[-1] == 0x13

    def test_floor_above_channel(self):

        sessions, results = run_pair(PlannerConfig(eve_ber_floor=0.4),
                                     PlannerConfig(eve_ber_floor=0.4),
                                     rounds=5000)
        assert all(isinstance(r, SecrecyImpossibleError) for r in results)
        for session in sessions:
            assert all(bits.length == 0 for bits in session._held)

    def test_disagreeing_configs(self):

        _, results = run_pair(CONFIG, PlannerConfig(eve_ber_floor=0.2),
                              rounds=5000)
        assert all(isinstance(r, KeyAgreementError) for r in results)

    def test_transcript(self):

        sessions, _ = run_pair(rounds=5000, seed=3)
        transcript = sessions[1].transcript()
        assert transcript.kind == 'live'
        assert transcript.session_id == SESSION_ID.hex()
        assert transcript.plan == sessions[1].report.plan.committed_fields
        rows = transcript.analysis_rows()
        assert len(rows) == len(transcript.parity_stats) + 1
        assert rows[0][1] == pytest.approx(1 / 3, abs=0.05)

    def test_no_transcript_before_run(self):

        a, b = socket.socketpair()
        session = KeyAgreementSession(SESSION_ID,
                                      transport.FramedChannel(a, True),
                                      CONFIG)
        with pytest.raises(TranscriptError):
            session.transcript()
        a.close()
        b.close()

    def test_local_fault_is_not_desync(self):

        a, b = socket.socketpair()
        session = KeyAgreementSession(SESSION_ID,
                                      transport.FramedChannel(a, True),
                                      CONFIG)
        samples = RttSeries([5000, 6000, 7000], [0, 0, 0], [0, 0, 1])
        with pytest.raises(DomainError):
            session.run(samples)
        assert session.channel.frames_sent == []
        a.close()
        b.close()

    def test_peer_discard_out_of_range(self):

        a, b = socket.socketpair()
        a.settimeout(5)
        b.sendall(wire.discard_set_frame(DiscardSet.of([5000])).encode())
        session = KeyAgreementSession(SESSION_ID,
                                      transport.FramedChannel(a, True),
                                      CONFIG)
        samples = RttSeries.from_rtts(list(range(1000, 2000)))
        with pytest.raises(DesyncError):
            session.run(samples)
        a.close()
        b.close()

    def test_default_sessions_agree(self):

        matched = 0
        reconciled = []
        for seed in range(100):
            sessions, results = run_pair(PlannerConfig(), PlannerConfig(),
                                         rounds=DEFAULT_ROUNDS, seed=seed)
            alice, bob = (getattr(r, 'digest', None) for r in results)
            if alice is not None and alice == bob:
                matched += 1
                report = sessions[0].report
                reconciled.append(report.reconciled_bits)
                assert report.final_length == \
                    report.reconciled_bits // report.plan.pa_block_size
        assert matched >= 99
        # About 1.04% of the rounds survive reconciliation
        assert sum(reconciled) / len(reconciled) == \
            pytest.approx(0.0104 * DEFAULT_ROUNDS, rel=0.2)


class TestSessionReport:

    def test_key_rate(self):

        report = SessionReport('initiator', final_length=30, elapsed_s=120)
        assert report.key_rate == 15
        assert SessionReport('responder').key_rate == 0

    def test_rows(self):

        report = SessionReport('initiator', rounds=100,
                               parity_stats=[ParityStats(3, 40)],
                               secrecy_bound=0.08)
        rows = dict(report.rows())
        assert rows['iteration_0_mismatches'] == 3
        assert rows['iteration_0_pairs'] == 40
        assert rows['secrecy_upper_bound'] == '0.080000'
        assert 'pa_block_size' not in rows
        assert 'predicted_key_ber' not in rows


class TestSessionTranscript:

    def record(self):
        record = ReconciliationTranscript(1000)
        record.stats = [ParityStats(222, 500), ParityStats(40, 138)]
        return(record)

    def test_round_trip(self, tmp_path):

        transcript = SessionTranscript.simulated(self.record(),
                                                 [0.33, 0.2, 0.06],
                                                 [0.2, 0.21, 0.22],
                                                 (2, 81, 1e-8, 0.08), 'ab')
        path = tmp_path / 'transcript.json'
        transcript.dump(str(path))
        loaded = SessionTranscript.load(str(path))
        assert loaded == transcript
        assert loaded.analysis_rows() == [(0, 0.33, 0.2), (1, 0.2, 0.21),
                                          (2, 0.06, 0.22)]

    def test_live_rows(self):

        rows = SessionTranscript.live(self.record()).analysis_rows()
        assert [r[0] for r in rows] == [0, 1, 2]
        assert rows[0][1] == pytest.approx(0.3333, abs=1e-3)
        assert rows[2][1] < rows[1][1] < rows[0][1]

    def test_live_file_has_no_ground_truth(self, tmp_path):

        path = tmp_path / 'live.json'
        SessionTranscript.live(self.record()).dump(str(path))
        data = json.loads(path.read_text())
        assert 'ber_ab' not in data
        assert data['iterations'][1] == {'mismatches': 40, 'pairs': 138}

    def test_empty(self, tmp_path):

        path = tmp_path / 'empty.json'
        path.write_text(json.dumps({'version': 1, 'kind': 'live',
                                    'iterations': []}))
        with pytest.raises(TranscriptError):
            SessionTranscript.load(str(path))

    def test_malformed(self, tmp_path):

        path = tmp_path / 'bad.json'
        for text in ('{', '[]', '{"kind": "live"}',
                     '{"kind": "other", "iterations": []}',
                     '{"kind": "simulate", "iterations": '
                     '[{"mismatches": 1, "pairs": 4}], "ber_ab": [0.1]}'):
            path.write_text(text)
            with pytest.raises(TranscriptError):
                SessionTranscript.load(str(path))
        with pytest.raises(TranscriptError):
            SessionTranscript.load(str(tmp_path / 'missing.json'))

    @pytest.mark.parametrize('ber_ab', [[0.33, 'oops'], [0.33, True],
                                        [0.33, 1.5], [0.33, [0.1]]])
    def test_malformed_values(self, tmp_path, ber_ab):

        path = tmp_path / 'bad.json'
        path.write_text(json.dumps({'kind': 'simulate',
                                    'iterations': [{'mismatches': 1,
                                                    'pairs': 4}],
                                    'ber_ab': ber_ab}))
        with pytest.raises(TranscriptError):
            SessionTranscript.load(str(path))

    def test_exhausted_iteration(self):

        transcript = SessionTranscript.simulated(self.record(),
                                                 [0.5, 0, None])
        assert transcript.analysis_rows()[-1] == (2, None)

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
