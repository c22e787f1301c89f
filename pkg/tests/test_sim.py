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

import numpy as np
import pytest

from transit_keygen.ksrt import sim
from transit_keygen.ksrt import stats
from transit_keygen.ksrt import transport
from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import TranscriptError
from transit_keygen.ksrt.extraction import SampleStatus
from transit_keygen.ksrt.reconcile import reconcile_locally
from transit_keygen.ksrt.sim import DelayModel

MS = 10**6
SESSION_ID = bytes(16)


class TestDelayModel:

    def test_validation(self):

        with pytest.raises(DomainError):
            DelayModel('pareto')
        with pytest.raises(DomainError):
            DelayModel(sim.DELAY_NORMAL, 0, -1)
        with pytest.raises(DomainError):
            DelayModel(sim.DELAY_STUDENT_T, 0, 1, 0)

    def test_median(self):

        assert DelayModel(sim.DELAY_NORMAL, 5 * MS, MS).median == 5 * MS
        assert DelayModel(sim.DELAY_SHIFTED_LOGNORMAL, 5 * MS,
                          MS).median == 6 * MS

    def test_clip(self):

        rng = np.random.default_rng(0)
        model = DelayModel(sim.DELAY_NORMAL, 0, MS)
        assert (model.sample(rng, 1000) >= 1).all()
        assert (model.sample(rng, 1000, clip=False) < 0).any()

    def test_constant(self):

        rng = np.random.default_rng(0)
        values = DelayModel(sim.DELAY_CONSTANT, 7 * MS, MS).sample(rng, 10)
        assert (values == 7 * MS).all()


class TestMonteCarloBer:

    def test_normal_delays(self):

        model = DelayModel(sim.DELAY_NORMAL, 50 * MS, MS)
        ber = sim.monte_carlo_ber(model, 10**6, seed=1)
        assert ber == pytest.approx(stats.theoretical_ber_symmetric(),
                                    abs=0.002)

    @pytest.mark.parametrize('kind', [sim.DELAY_LAPLACE, sim.DELAY_STUDENT_T])
    def test_symmetric_delays(self, kind):

        model = DelayModel(kind, 50 * MS, MS)
        ber = sim.monte_carlo_ber(model, 10**6, seed=1)
        assert ber == pytest.approx(stats.theoretical_ber_symmetric(),
                                    abs=0.005)

    def test_seeded(self):

        model = DelayModel(sim.DELAY_LAPLACE, 50 * MS, MS)
        assert sim.monte_carlo_ber(model, 5000, seed=9) == \
            sim.monte_carlo_ber(model, 5000, seed=9)

    def test_constant_delays_all_tie(self):

        with pytest.raises(DomainError):
            sim.monte_carlo_ber(DelayModel(sim.DELAY_CONSTANT, MS), 5000)

    def test_too_few_rounds(self):

        with pytest.raises(DomainError):
            sim.monte_carlo_ber(DelayModel(), 999)


class TestTopology:

    def test_default(self):

        topology = sim.default_topology()
        assert len(topology.hops) == 3
        assert topology.eve_position == 1
        assert topology.hop_names[0] == 'alice-eve'

    def test_eve_position_range(self):

        hops = (DelayModel(sim.DELAY_NORMAL, MS, 1000),) * 2
        with pytest.raises(DomainError):
            sim.ChainTopology(hops, 2)
        assert sim.ChainTopology(hops, 0).with_eve(1).eve_position == 1

    def test_load(self, tmp_path):

        path = tmp_path / 'chain.topology'
        path.write_text('[hop:lan]\n'
                        'kind = laplace\n'
                        'location_ns = 1000000\n'
                        'scale_ns = 20000\n'
                        '\n'
                        '[hop:wan]\n'
                        'kind = student_t\n'
                        'location_ns = 30000000\n'
                        'scale_ns = 400000\n'
                        'shape = 4\n'
                        '\n'
                        '[eve]\n'
                        'position = 1\n'
                        'jitter_kind = normal\n'
                        'jitter_scale_ns = 5000\n'
                        )
        topology = sim.load_topology(str(path))
        assert topology.hop_names == ('lan', 'wan')
        assert topology.hops[0] == DelayModel(sim.DELAY_LAPLACE, 1e6, 2e4)
        assert topology.hops[1].shape == 4.0
        assert topology.eve_position == 1
        assert topology.eve_jitter.scale_ns == 5000

    def test_load_errors(self, tmp_path):

        with pytest.raises(ValueError):
            sim.load_topology(str(tmp_path / 'missing'))
        path = tmp_path / 'bad.topology'
        path.write_text('[hop:a]\nkind = uniform\n')
        with pytest.raises(ValueError):
            sim.load_topology(str(path))
        path.write_text('[hop:a]\nlocation_ns = 10\n[eve]\nposition = 3\n')
        with pytest.raises(ValueError):
            sim.load_topology(str(path))


class TestSimulatedRallies:

    def test_lossless(self):

        alice, bob, eve = sim.simulate_rallies(sim.default_topology(), 1000,
                                               seed=2)
        assert (alice.status == SampleStatus.OK).all()
        assert (bob.status[:-1] == SampleStatus.OK).all()
        assert bob.status[-1] == SampleStatus.DISCARDED
        assert eve.ok.all()
        # Eve sits one hop in, so she sees less than the whole round trip
        assert (eve.interval < alice.rtt).mean() > 0.99

    def test_seeded(self):

        a1, b1, _ = sim.simulate_rallies(sim.default_topology(), 500, seed=4)
        a2, b2, _ = sim.simulate_rallies(sim.default_topology(), 500, seed=4)
        assert (a1.rtt == a2.rtt).all()
        assert (b1.rtt == b2.rtt).all()

    def test_drops(self):

        alice, bob, eve = sim.simulate_rallies(sim.default_topology(), 5000,
                                               drop_prob=0.05, seed=3)
        lost = (alice.status != SampleStatus.OK).mean()
        assert lost == pytest.approx(1 - 0.95**2, abs=0.02)
        assert not eve.ok[alice.status != SampleStatus.OK].any()

    def test_eavesdropper_at_alice(self):

        topology = sim.default_topology().with_eve(
                     0, DelayModel(sim.DELAY_CONSTANT))
        alice, bob, eve = sim.simulate_rallies(topology, 2000, seed=5)
        truth = sim.ground_truth(alice, bob, eve)
        assert truth.ber_eve == 0.0
        assert truth.eve == truth.alice

    def test_default_chain(self):

        alice, bob, eve = sim.simulate_rallies(sim.default_topology(),
                                               100000, seed=6)
        truth = sim.ground_truth(alice, bob, eve)
        assert truth.ber_ab == pytest.approx(1 / 3, abs=0.005)
        # Eve shares every long-haul hop with Alice
        assert 0.03 < truth.ber_eve < 0.07

    def reconciled_bers(self, topology, rounds, seed):
        alice, bob, eve = sim.simulate_rallies(topology, rounds, seed=seed)
        truth = sim.ground_truth(alice, bob, eve)
        _, _, record = reconcile_locally(truth.alice, truth.bob, 5)
        ab = sim.eve_track_reconciliation(truth.bob, truth.alice,
                                          record.parities)
        eve_bers = sim.eve_track_reconciliation(truth.eve, truth.alice,
                                                record.parities)
        assert len(ab) == len(eve_bers) == 6
        settled = next(i for i, ber in enumerate(ab) if ber <= 1e-3)
        return(ab, eve_bers, settled)

    def test_eavesdropper_plateau(self):

        ab, eve_bers, settled = self.reconciled_bers(sim.default_topology(),
                                                     300000, seed=11)
        assert settled <= 4
        assert eve_bers[0] == pytest.approx(0.046, abs=0.01)
        # Alice and Bob converge while Eve keeps a floor
        for ber in eve_bers[settled:]:
            assert ber >= 0.01

    def test_quiet_lan_leaks_bits(self):

        topology = sim.default_topology(jitter_fraction=0.0)
        hops = (DelayModel(sim.DELAY_NORMAL, MS, 10_000),) + topology.hops[1:]
        quiet = sim.ChainTopology(hops, topology.eve_position,
                                  topology.eve_jitter, topology.hop_names)
        _, eve_bers, settled = self.reconciled_bers(quiet, 300000, seed=11)
        assert settled <= 4
        assert eve_bers[0] < 0.01
        assert eve_bers[-1] < 0.01

    def test_jitter_hides_bits(self):

        for seed in range(20):
            bers = []
            for fraction in (0.0, 0.5, 2.0, 50.0):
                topology = sim.default_topology(jitter_fraction=fraction)
                alice, bob, eve = sim.simulate_rallies(topology, 20000,
                                                       seed=seed)
                bers.append(sim.ground_truth(alice, bob, eve).ber_eve)
            assert bers == sorted(bers)
            assert bers[-1] == pytest.approx(0.5, abs=0.03)


class TestSimulatedChain:

    def test_matches_eavesdropper_at_alice(self):

        topology = sim.default_topology().with_eve(
                     0, DelayModel(sim.DELAY_CONSTANT))
        chain = sim.SimulatedChain(topology, seed=8)
        initiator = transport.InitiatorRally(SESSION_ID, 200)
        responder = transport.ResponderRally(SESSION_ID, 200)
        alice, bob, eve = chain.run(initiator, responder)
        assert eve.ok.all()
        assert (eve.interval == alice.rtt).all()
        assert chain.elapsed_ns >= alice.rtt.sum()

    def test_drops_hidden_from_eavesdropper(self):

        chain = sim.SimulatedChain(sim.default_topology(), drop_prob=0.1,
                                   seed=9)
        initiator = transport.InitiatorRally(SESSION_ID, 300)
        responder = transport.ResponderRally(SESSION_ID, 300)
        alice, bob, eve = chain.run(initiator, responder)
        failed = alice.status != SampleStatus.OK
        assert failed.any()
        assert eve.ok[~failed].all()


class TestTrackReconciliation:

    def test_bsc_transcript(self):

        transcript = sim.bsc_transcript(20000, 0.1, 3, seed=10)
        rows = transcript.analysis_rows()
        assert [r[0] for r in rows] == [0, 1, 2, 3]
        assert rows[0][1] == pytest.approx(0.1, abs=0.01)
        assert rows[1][1] == pytest.approx(stats.pair_iteration_ber(0.1),
                                           abs=0.005)
        assert not transcript.has_eve

    def test_bsc_follows_recursion(self):

        transcript = sim.bsc_transcript(200000, 1 / 3, 4, seed=12)
        rows = transcript.analysis_rows()
        assert len(rows) == 5
        n, e = 200000, 1 / 3
        for _, measured in rows:
            # Deep iterations leave a handful of errors at most
            tolerance = max(3 * (e * (1 - e) / n) ** 0.5, 3 / n)
            assert abs(measured - e) <= tolerance
            n *= (1 - stats.parity_mismatch_rate(e)) / 2
            e = stats.pair_iteration_ber(e)

    def test_length_mismatch(self):

        _, _, record = reconcile_locally(
          BitString.from_str('1010'), BitString.from_str('1000'), 1)
        with pytest.raises(TranscriptError):
            sim.eve_track_reconciliation(BitString.from_str('10'),
                                         BitString.from_str('1010'),
                                         record.parities)

    def test_nothing_left(self):

        alice = BitString.from_str('10')
        bob = BitString.from_str('11')
        _, _, record = reconcile_locally(alice, bob, 1)
        assert sim.eve_track_reconciliation(bob, alice,
                                            record.parities) == [0.5, None]

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
