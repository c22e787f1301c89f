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

import argparse
import csv
import logging
import os
import socket
import struct
import sys
import threading
import time

from rich.console import Console
from rich.table import Table
from . import __about__
from .const import DEFAULT_EVE_BER_FLOOR
from .const import DEFAULT_FINAL_BER
from .const import DEFAULT_FORMAT
from .const import DEFAULT_LEAKAGE_BUDGET
from .const import DEFAULT_ROUNDS
from .const import DEFAULT_SEED
from .const import DEFAULT_SESSIONS
from .const import DEFAULT_TIMEOUT_MS
from .const import DEFAULT_Z
from .const import FORMAT_HEX
from .const import FORMAT_OPTIONS
from .const import FRAMED_PORT_OFFSET
from .const import KEYGEN_MODES
from .const import MILLISECOND_NS
from .const import MODE_ANALYZE
from .const import MODE_INITIATOR
from .const import MODE_OPTIONS
from .const import MODE_RESPONDER
from .const import MODE_SIMULATE
from .settings import Settings
from .settings import drop_prob
from .settings import hostport
from .settings import key_format
from .settings import milliseconds
from .settings import positive
from .settings import positive_count
from .settings import probability
from .settings import count
from .settings import rounds
from .settings import session_id
from .util import ber, bits, duration
from .ksrt import sim
from .ksrt import transport
from .ksrt.errors import ChannelLossError
from .ksrt.errors import KeyAgreementError
from .ksrt.errors import TranscriptError
from .ksrt.session import KeyAgreementSession
from .ksrt.session import SessionTranscript

logger = None


class LessThanFilter(logging.Filter):

    def __init__(self, exclusive_maximum, name=''):
        super(LessThanFilter, self).__init__(name)
        self.max_level = exclusive_maximum

    def filter(self, record):
        return(1 if record.levelno < self.max_level else 0)

# End LessThanFilter


class CustomLogFormatter(logging.Formatter):

    def __init__(self):
        # If attached to systemd journal, let it take care of log timestamps
        if 'JOURNAL_STREAM' in os.environ:
            self.FORMATS = {
                logging.DEBUG: '%(msg)s',
                logging.INFO: '%(msg)s',
                logging.WARNING: '%(levelname)s %(msg)s',
                logging.ERROR: '%(levelname)s %(msg)s',
                logging.CRITICAL: '%(levelname)s %(msg)s',
                }
        else:
            self.FORMATS = {
                logging.DEBUG: '%(asctime)s %(msg)s',
                logging.INFO: '%(asctime)s %(msg)s',
                logging.WARNING: '%(asctime)s %(levelname)s %(msg)s',
                logging.ERROR: '%(asctime)s %(levelname)s %(msg)s',
                logging.CRITICAL: '%(asctime)s %(levelname)s %(msg)s',
                }

    def format(self, record):
        formatter = logging.Formatter(self.FORMATS.get(record.levelno))
        return(formatter.format(record))

# End CustomLogFormatter


def configure_loggers(quiet=False, verbose=False):

    global logger

    logger = logging.getLogger()
    if verbose:
        logger.setLevel(logging.DEBUG)
    elif quiet:
        logger.setLevel(logging.WARNING)
    else:
        logger.setLevel(logging.INFO)
    custom_formatter = CustomLogFormatter()

    stdout_handler = logging.StreamHandler(sys.stdout)
    stdout_handler.setFormatter(custom_formatter)
    stdout_handler.setLevel(logging.DEBUG)
    stdout_handler.addFilter(LessThanFilter(logging.WARNING))
    logger.addHandler(stdout_handler)

    stderr_handler = logging.StreamHandler(sys.stderr)
    stderr_handler.setFormatter(custom_formatter)
    stderr_handler.setLevel(logging.WARNING)
    logger.addHandler(stderr_handler)

# End configure_loggers


def parse_args(argv):

    parser = argparse.ArgumentParser(prog=__about__.__name__,
                                     description=__about__.__description__
                                     )

    parser.add_argument(
      '--mode', choices=MODE_OPTIONS,
      help='What to run. "keygen-initiator" and "keygen-responder" are the '
      'two ends of a live key agreement; "simulate" runs both ends '
      'in-process over a simulated chain; "analyze" turns a transcript into '
      'per-iteration error rates.'
      )

    parser.add_argument(
      '--peer', metavar='HOST:PORT', type=hostport,
      help='Rally address of the responder (keygen-initiator). The framed '
      f'reconciliation channel is on the next port (+{FRAMED_PORT_OFFSET}).'
      )

    parser.add_argument(
      '--listen', metavar='HOST:PORT', type=hostport,
      help='Local rally address to bind. Required for keygen-responder, '
      'which also listens for the framed channel on the next port.'
      )

    parser.add_argument(
      '--session-id', metavar='HEX32', type=session_id,
      help='Session id shared by both ends out of band, 32 hex digits.'
      )

    parser.add_argument(
      '--rounds', metavar='N', type=rounds,
      help=f'Number of rally round trips. Default is {DEFAULT_ROUNDS}.'
      )

    parser.add_argument(
      '--timeout-ms', metavar='N', type=milliseconds,
      help='Milliseconds to wait for the next rally packet before the round '
      f'is marked timed out. Default is {DEFAULT_TIMEOUT_MS}.'
      )

    parser.add_argument(
      '--eve-ber-floor', metavar='F', type=probability,
      help='Assumed lower bound on the eavesdropper\'s bit error rate, used '
      f'to size privacy amplification. Default is {DEFAULT_EVE_BER_FLOOR}.'
      )

    parser.add_argument(
      '--final-ber', metavar='F', type=probability,
      help=f'Target bit error rate of the final key. Default is '
      f'{DEFAULT_FINAL_BER}.'
      )

    parser.add_argument(
      '--leakage-budget', metavar='F', type=positive,
      help='Eavesdropper information allowed per final key bit. Default is '
      f'{DEFAULT_LEAKAGE_BUDGET}.'
      )

    parser.add_argument(
      '--z', metavar='F', type=positive,
      help='Confidence multiplier for the channel error rate interval. '
      f'Default is {DEFAULT_Z}.'
      )

    parser.add_argument(
      '--out', metavar='PATH',
      help='Key file to write (keygen and simulate), or CSV to write '
      '(analyze).'
      )

    parser.add_argument(
      '--format', choices=FORMAT_OPTIONS, type=key_format,
      default=DEFAULT_FORMAT,
      help='Key file format. "raw" is a 4-byte big-endian bit count '
      'followed by the packed key bytes; "hex" is one line of lowercase '
      f'hex per key. Default is "{DEFAULT_FORMAT}".'
      )

    parser.add_argument(
      '--transcript', metavar='PATH',
      help='Transcript to write (keygen and simulate) or to read (analyze).'
      )

    parser.add_argument(
      '--report', metavar='PATH',
      help='Write the session report as CSV.'
      )

    parser.add_argument(
      '--seed', metavar='N', type=count, default=DEFAULT_SEED,
      help=f'Random seed for simulate. Default is {DEFAULT_SEED}.'
      )

    parser.add_argument(
      '--sessions', metavar='N', type=positive_count,
      default=DEFAULT_SESSIONS,
      help='Number of simulated sessions, seeded SEED to SEED+N-1. Default '
      f'is {DEFAULT_SESSIONS}.'
      )

    parser.add_argument(
      '--topology', metavar='PATH',
      help='Chain topology file for simulate. Default is a three-hop chain '
      'with the eavesdropper next to the initiator.'
      )

    parser.add_argument(
      '--drop-prob', metavar='F', type=drop_prob,
      help='Per-packet loss probability for simulate. Default is 0.'
      )

    parser.add_argument(
      '-f', '--conf-file', metavar='FILE', type=argparse.FileType('r'),
      help='Path to configuration file with [planner] and [session] '
      'sections. Options given on the command-line override those in the '
      'configuration file.'
      )

    parser.add_argument(
      '-V', '--version', action='store_true',
      help='Show version number and exit.'
      )

    verbose_group = parser.add_mutually_exclusive_group()

    verbose_group.add_argument(
      '-q', '--quiet', action='store_true',
      help='Suppress all messages except errors, and the report table.'
      )

    verbose_group.add_argument(
      '-v', '--verbose', action='store_true',
      help='Print protocol progress messages.'
      )

    args = parser.parse_args(argv)
    return(args)

# End parse_args


def check_args(args):

    missing = []
    if args.mode is None:
        missing.append('--mode')
    if args.mode == MODE_INITIATOR and args.peer is None:
        missing.append('--peer')
    if args.mode == MODE_RESPONDER and args.listen is None:
        missing.append('--listen')
    if args.mode in KEYGEN_MODES and args.session_id is None:
        missing.append('--session-id')
    if args.mode == MODE_ANALYZE and args.transcript is None:
        missing.append('--transcript')
    if args.mode is not None and args.out is None:
        missing.append('--out')
    if missing:
        raise ValueError(f'missing required option(s) for mode '
                         f'"{args.mode}": {", ".join(missing)}'
                         )

# End check_args


def write_key_file(path, keys, key_format):

    if key_format == FORMAT_HEX:
        with open(path, 'w', encoding='utf-8') as f:
            for key in keys:
                f.write(key.key_bytes().hex() + '\n')
    else:
        with open(path, 'wb') as f:
            for key in keys:
                f.write(struct.pack('>I', key.key.length))
                f.write(key.key_bytes())

# End write_key_file


def write_report(path, rows):

    with open(path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(['statistic', 'value'])
        for statistic, value in rows:
            writer.writerow([statistic, value])

# End write_report


def print_report(title, rows):

    console = Console()
    table = Table(title=title)
    table.add_column('Statistic', no_wrap=True)
    table.add_column('Value', justify='right')
    for statistic, value in rows:
        table.add_row(statistic, str(value))
    console.print(table)

# End print_report


def finish_report(args, title, rows):

    if args.report is not None:
        write_report(args.report, rows)
    if not args.quiet:
        print_report(title, rows)

# End finish_report


def run_keygen(args, settings):
    """Live key agreement over UDP and a framed stream"""

    session_settings = settings['session']
    config = settings['planner']
    initiator = args.mode == MODE_INITIATOR
    timeout_ns = session_settings['timeout_ms'] * MILLISECOND_NS
    connect_timeout_s = session_settings['connect_timeout_ms'] / 1000

    udp = socket.socket(socket.AF_INET, socket.SOCK_DGRAM)
    listener = None
    try:
        udp.bind(args.listen or ('0.0.0.0', 0))
        if not initiator:
            listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
            listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
            listener.bind(transport.framed_port(args.listen,
                                                FRAMED_PORT_OFFSET))
            listener.listen(1)
            logger.info(f'Waiting for the initiator on '
                        f'{args.listen[0]}:{args.listen[1]}'
                        )

        started_at = time.monotonic()
        samples = transport.rally(
                    args.session_id, session_settings['rounds'], udp,
                    peer=args.peer, initiator=initiator,
                    timeout_ns=timeout_ns,
                    max_consecutive_timeouts=session_settings[
                                               'max_consecutive_timeouts'],
                    min_round_gap_ns=(session_settings['min_round_gap_ms']
                                      * MILLISECOND_NS),
                    stop_socket=listener
                    )
        if initiator:
            channel = transport.connect_framed_channel(
                        transport.framed_port(args.peer, FRAMED_PORT_OFFSET),
                        connect_timeout_s)
        else:
            channel = transport.accept_framed_channel(listener,
                                                      connect_timeout_s)
        try:
            session = KeyAgreementSession(args.session_id, channel, config)
            key = session.run(samples, started_at)
        finally:
            channel.close()
    finally:
        udp.close()
        if listener is not None:
            listener.close()

    return(key, session)

# End run_keygen


def simulate_session(topology, session_settings, config, seed,
                     key_session_id):
    """One seeded session with both endpoints in this process.

    The rally runs over the simulated chain; the endpoints then talk over
    a stream socket pair from two threads. Returns (initiator key,
    initiator session, transcript with ground truth).
    """
    timeout_ns = session_settings['timeout_ms'] * MILLISECOND_NS
    chain = sim.SimulatedChain(topology, session_settings['drop_prob'], seed)
    alice_samples, bob_samples, eve = chain.run(
        transport.InitiatorRally(
          key_session_id, session_settings['rounds'], timeout_ns,
          session_settings['max_consecutive_timeouts'],
          session_settings['min_round_gap_ms'] * MILLISECOND_NS),
        transport.ResponderRally(
          key_session_id, session_settings['rounds'], timeout_ns,
          session_settings['max_consecutive_timeouts'])
        )
    truth = sim.ground_truth(alice_samples, bob_samples, eve)
    logger.debug(f'Seed {seed}: raw error rate {ber(truth.ber_ab)} between '
                 f'the endpoints, {ber(truth.ber_eve)} for the eavesdropper'
                 )

    alice_sock, bob_sock = socket.socketpair()
    for sock in (alice_sock, bob_sock):
        sock.settimeout(session_settings['connect_timeout_ms'] / 1000)
    sessions = [KeyAgreementSession(key_session_id,
                                    transport.FramedChannel(sock, initiator),
                                    config, truth.ber_eve)
                for sock, initiator in ((alice_sock, True),
                                        (bob_sock, False))]
    keys = [None, None]
    errors = [None, None]

    def endpoint(i, samples):
        try:
            keys[i] = sessions[i].run(samples)
        except Exception as e:
            errors[i] = e
            # Unblocks the other endpoint
            sessions[i].channel.close()

    threads = [threading.Thread(target=endpoint, args=(0, alice_samples)),
               threading.Thread(target=endpoint, args=(1, bob_samples))]
    try:
        for thread in threads:
            thread.start()
        for thread in threads:
            thread.join()
    finally:
        for session in sessions:
            session.channel.close()

    try:
        if errors[0] or errors[1]:
            if keys[0] is not None:
                keys[0].destroy()
            # The first cause, not the peer's resulting channel loss
            causes = [e for e in errors
                      if e is not None and not isinstance(e, ChannelLossError)]
            raise (causes or [e for e in errors if e is not None])[0]

        parities = sessions[0].record.parities
        transcript = sessions[0].transcript(
                       sim.eve_track_reconciliation(truth.bob, truth.alice,
                                                    parities),
                       sim.eve_track_reconciliation(truth.eve, truth.alice,
                                                    parities))
        if (sessions[0].report.shared_statistics()
                != sessions[1].report.shared_statistics()):
            logger.warning(f'Seed {seed}: endpoint reports disagree')
    finally:
        truth.wipe()
        for key in keys[1:]:
            if key is not None:
                key.destroy()

    report = sessions[0].report
    report.elapsed_s += chain.elapsed_ns / 10**9
    return(keys[0], sessions[0], transcript)

# End simulate_session


def run_simulate(args, settings):

    session_settings = settings['session']
    config = settings['planner']
    if args.topology is not None:
        topology = sim.load_topology(args.topology)
    else:
        topology = sim.default_topology()

    results = []
    failures = {}
    for seed in range(args.seed, args.seed + args.sessions):
        key_session_id = args.session_id or seed.to_bytes(16, 'big')
        try:
            results.append(simulate_session(topology, session_settings,
                                            config, seed, key_session_id))
        except KeyAgreementError as e:
            if args.sessions == 1:
                raise
            logger.warning(f'Seed {seed}: session aborted: {e}')
            failures[e.cause] = failures.get(e.cause, 0) + 1

    if not results:
        raise KeyAgreementError(f'none of {args.sessions} sessions produced '
                                'a key')
    return(results, failures)

# End run_simulate


def run_analyze(transcript_path, out_path):

    transcript = SessionTranscript.load(transcript_path)
    rows = transcript.analysis_rows()
    header = ['iteration', 'ber_ab'] + (['ber_eve'] if transcript.has_eve
                                        else [])
    # Format everything before the output file exists
    table = [[row[0]] + ['' if v is None else f'{v:.6g}' for v in row[1:]]
             for row in rows]
    with open(out_path, 'w', newline='', encoding='utf-8') as f:
        writer = csv.writer(f)
        writer.writerow(header)
        writer.writerows(table)
    logger.info(f'Wrote {len(rows)} rows from a {transcript.kind} '
                f'transcript to {out_path}'
                )

# End run_analyze


def main():

    global logger

    try:
        args = parse_args(sys.argv[1:])

        if args.version:
            print(f'{__about__.__name__} {__about__.__version__}')
            sys.exit()

        configure_loggers(args.quiet, args.verbose)
        check_args(args)

        conf_file_path = None
        if args.conf_file is not None:
            conf_file_path = args.conf_file.name
            args.conf_file.close()
        settings = Settings(args, conf_file_path)

        if args.mode == MODE_ANALYZE:
            run_analyze(args.transcript, args.out)

        elif args.mode == MODE_SIMULATE:
            results, failures = run_simulate(args, settings)
            keys = [key for key, _, _ in results]
            write_key_file(args.out, keys, args.format)
            if args.transcript is not None:
                results[0][2].dump(args.transcript)
            if args.sessions == 1:
                rows = results[0][1].report.rows()
            else:
                rows = [('sessions', args.sessions),
                        ('completed', len(results)),
                        ('total_key_bits', sum(k.key.length for k in keys)),
                        ]
                rows.extend((f'aborted_{cause.replace(" ", "_")}', n)
                            for cause, n in sorted(failures.items()))
            logger.info(f'Wrote {len(keys)} key(s), '
                        f'{bits(sum(k.key.length for k in keys))}, to '
                        f'{args.out}'
                        )
            for key in keys:
                key.destroy()
            finish_report(args, 'Simulated key agreement', rows)

        else:
            key, session = run_keygen(args, settings)
            try:
                write_key_file(args.out, [key], args.format)
            finally:
                key.destroy()
            if args.transcript is not None:
                session.transcript().dump(args.transcript)
            report = session.report
            logger.info(f'Wrote {bits(report.final_length)} to {args.out} '
                        f'after {duration(report.elapsed_s)}'
                        )
            finish_report(args, f'Key agreement ({session.role})',
                          report.rows())

    except ValueError as value_err:
        logger.error(value_err)
        sys.exit(2)
    except (KeyAgreementError, TranscriptError) as e:
        logger.error(e)
        sys.exit(1)
    except OSError as e:
        logger.error(f'Unexpected error: {e}')
        sys.exit(1)
    except KeyboardInterrupt:
        print()
        sys.exit(1)

# End main()


if __name__ == '__main__':
    main()

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
