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

import csv
import json
import os
import struct
import subprocess
import sys
import tempfile

from transit_keygen.util import ber, bits, duration

project_path = os.path.dirname(os.path.dirname(os.path.realpath(__file__)))
cmd_base = [sys.executable, '-m', 'transit_keygen.core']
# Short blocks so a few thousand simulated rounds still yield key bits
simulate_base = cmd_base + ['--mode', 'simulate', '--rounds', '8000',
                            '--eve-ber-floor', '0.1', '-q']


def run(args):
    return(subprocess.run(args, cwd=project_path, capture_output=True,
                          text=True, timeout=300))


class TestFunctions:

    def test_duration(self):

        assert duration(0) == '0.00 seconds'
        assert duration(1.5) == '1.50 seconds'
        assert duration(60) == '1 minute'
        assert duration((43*60) + 39) == '43 minutes, 39 seconds'
        assert duration(3600) == '1 hour'
        assert duration((3600*14) + (60*15) + 59) == \
            '14 hours, 15 minutes, 59 seconds'

    def test_bits(self):

        assert bits(1) == '1 bit'
        assert bits(0) == '0 bits'
        assert bits(163) == '163 bits'

    def test_ber(self):

        assert ber(None) == 'n/a'
        assert ber(0) == '0.0000'
        assert ber(1/3) == '0.3333'
        assert ber(2.5e-6) == '2.50e-06'


class TestCommandLine:

    def test_version(self):

        result = run(cmd_base + ['-V'])
        assert result.returncode == 0
        assert result.stdout.startswith('transit_keygen ')

    def test_missing_mode(self):

        result = run(cmd_base + ['--out', 'key.bin'])
        assert result.returncode == 2
        assert '--mode' in result.stderr

    def test_missing_out(self):

        result = run(cmd_base + ['--mode', 'simulate'])
        assert result.returncode == 2
        assert '--out' in result.stderr

    def test_bad_values(self):

        for flag, value in (('--rounds', '5'), ('--eve-ber-floor', '0.7'),
                            ('--drop-prob', '1.5'), ('--mode', 'relay')):
            result = run(cmd_base + ['--out', 'key.bin', flag, value])
            assert result.returncode == 2

    def test_bad_conf_file(self):

        with tempfile.TemporaryDirectory() as tmp:
            conf = os.path.join(tmp, 'bad.conf')
            with open(conf, 'w') as f:
                f.write('[planner]\neve_ber_floor = 0.9\n')
            out = os.path.join(tmp, 'key.bin')
            result = run(cmd_base + ['--mode', 'simulate', '--out', out,
                                     '-f', conf])
            assert result.returncode == 2
            assert 'eve_ber_floor' in result.stderr
            assert not os.path.exists(out)

    def test_simulate(self):

        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'key.bin')
            transcript = os.path.join(tmp, 'transcript.json')
            report = os.path.join(tmp, 'report.csv')
            result = run(simulate_base + ['--seed', '2', '--out', out,
                                          '--transcript', transcript,
                                          '--report', report])
            assert result.returncode == 0, result.stderr

            with open(out, 'rb') as f:
                data = f.read()
            length = struct.unpack('>I', data[:4])[0]
            assert length > 0
            assert len(data) == 4 + (length + 7) // 8

            with open(report, newline='') as f:
                rows = dict(csv.reader(f))
            assert rows['statistic'] == 'value'
            assert rows['role'] == 'initiator'
            assert int(rows['final_length']) == length
            assert int(rows['pa_block_size']) == 15

            with open(transcript) as f:
                data = json.load(f)
            assert data['kind'] == 'simulate'
            assert len(data['ber_ab']) == len(data['iterations']) + 1

            analysis = os.path.join(tmp, 'analysis.csv')
            result = run(cmd_base + ['--mode', 'analyze', '--transcript',
                                     transcript, '--out', analysis, '-q'])
            assert result.returncode == 0, result.stderr
            with open(analysis, newline='') as f:
                table = list(csv.reader(f))
            assert table[0] == ['iteration', 'ber_ab', 'ber_eve']
            assert len(table) == len(data['iterations']) + 2
            assert table[-1][1] == '0'

    def test_simulate_hex_sessions(self):

        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'keys.hex')
            report = os.path.join(tmp, 'report.csv')
            result = run(simulate_base + ['--sessions', '3', '--format',
                                          'hex', '--out', out, '--report',
                                          report])
            assert result.returncode == 0, result.stderr
            with open(report, newline='') as f:
                rows = dict(csv.reader(f))
            completed = int(rows['completed'])
            with open(out) as f:
                lines = f.read().splitlines()
            assert len(lines) == completed
            assert all(int(line, 16) >= 0 for line in lines)

    def test_simulate_seeded(self):

        with tempfile.TemporaryDirectory() as tmp:
            keys = []
            for name in ('a.hex', 'b.hex'):
                out = os.path.join(tmp, name)
                result = run(simulate_base + ['--seed', '4', '--format',
                                              'hex', '--out', out])
                assert result.returncode == 0, result.stderr
                with open(out) as f:
                    keys.append(f.read())
            assert keys[0] == keys[1]

    def test_analyze_empty_transcript(self):

        with tempfile.TemporaryDirectory() as tmp:
            transcript = os.path.join(tmp, 'empty.json')
            with open(transcript, 'w') as f:
                json.dump({'version': 1, 'kind': 'live', 'iterations': []}, f)
            out = os.path.join(tmp, 'analysis.csv')
            result = run(cmd_base + ['--mode', 'analyze', '--transcript',
                                     transcript, '--out', out])
            assert result.returncode == 1
            assert 'empty transcript' in result.stderr
            assert not os.path.exists(out)

    def test_analyze_malformed_values(self):

        with tempfile.TemporaryDirectory() as tmp:
            transcript = os.path.join(tmp, 'bad.json')
            with open(transcript, 'w') as f:
                json.dump({'version': 1, 'kind': 'simulate',
                           'iterations': [{'mismatches': 1, 'pairs': 4}],
                           'ber_ab': [0.33, 'oops']}, f)
            out = os.path.join(tmp, 'bad.csv')
            result = run(cmd_base + ['--mode', 'analyze', '--transcript',
                                     transcript, '--out', out])
            assert result.returncode == 1
            assert 'ber_ab[1]' in result.stderr
            assert not os.path.exists(out)

    def test_analyze_live_transcript(self):

        with tempfile.TemporaryDirectory() as tmp:
            transcript = os.path.join(tmp, 'live.json')
            with open(transcript, 'w') as f:
                json.dump({'version': 1, 'kind': 'live',
                           'iterations': [{'mismatches': 4444, 'pairs': 10000},
                                          {'mismatches': 1100,
                                           'pairs': 3444}]}, f)
            out = os.path.join(tmp, 'analysis.csv')
            result = run(cmd_base + ['--mode', 'analyze', '--transcript',
                                     transcript, '--out', out, '-q'])
            assert result.returncode == 0, result.stderr
            with open(out, newline='') as f:
                table = list(csv.reader(f))
            assert table[0] == ['iteration', 'ber_ab']
            assert len(table) == 4
            assert abs(float(table[1][1]) - 1/3) < 1e-3

    def test_responder_absent(self):

        with tempfile.TemporaryDirectory() as tmp:
            out = os.path.join(tmp, 'key.bin')
            result = run(cmd_base + ['--mode', 'keygen-initiator',
                                     '--peer', '127.0.0.1:9',
                                     '--session-id', '11' * 16,
                                     '--rounds', '100', '--timeout-ms', '50',
                                     '--out', out])
            assert result.returncode == 1
            assert 'channel loss' in result.stderr
            assert not os.path.exists(out)

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
