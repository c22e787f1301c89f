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

"""Rally protocol and the framed reconciliation channel.

The rally state machines never read a clock themselves. A driver hands
them the monotonic time of each send and receive: ``run_udp_rally`` uses
real sockets and ``time.monotonic_ns``, ``sim.SimulatedChain`` uses a
virtual clock.
"""

import logging
import select
import socket
import struct
import time

import numpy as np

from transit_keygen.ksrt import wire
from transit_keygen.ksrt.errors import ChannelLossError
from transit_keygen.ksrt.errors import DesyncError
from transit_keygen.ksrt.extraction import RttSeries
from transit_keygen.ksrt.extraction import SampleStatus

logger = logging.getLogger(__name__)

DEFAULT_TIMEOUT_NS = 2 * 10**9
DEFAULT_MAX_CONSECUTIVE_TIMEOUTS = 10
RECV_BUFFER = 2048


class _Rally:

    def __init__(self, session_id, rounds, timeout_ns=DEFAULT_TIMEOUT_NS,
                 max_consecutive_timeouts=DEFAULT_MAX_CONSECUTIVE_TIMEOUTS):
        if rounds < 1:
            raise ValueError(f'rounds must be at least 1: {rounds!r}')
        self.session_id = session_id
        self.rounds = rounds
        self.timeout_ns = timeout_ns
        self.max_consecutive_timeouts = max_consecutive_timeouts
        self.consecutive_timeouts = 0
        self.deadline = None
        self.finished = False
        self._rtt = np.zeros(rounds, dtype=np.int64)
        self._status = np.full(rounds, SampleStatus.TIMED_OUT, dtype=np.uint8)

    def _parse(self, data):
        packet = wire.RallyPacket.decode(data)
        if packet is None or packet.session_id != self.session_id:
            return(None)
        return(packet)

    def _timed_out(self, what):
        self.consecutive_timeouts += 1
        if self.consecutive_timeouts >= self.max_consecutive_timeouts:
            raise ChannelLossError(f'channel loss: {self.consecutive_timeouts} '
                                   f'consecutive timeouts waiting for {what}'
                                   )

    def _record(self, seq, rtt):
        self._rtt[seq] = rtt
        self._status[seq] = SampleStatus.OK

    def samples(self):
        return(RttSeries(self._rtt, self._status))

    @property
    def wake_time(self):
        """Earliest time at which poll() may have something to send"""
        return(None)


class InitiatorRally(_Rally):
    """Sends PROBE(i), waits for ECHO(i), sends PROBE(i+1) at once.

    Sample i is the time from sending PROBE(i) to receiving ECHO(i).
    """

    def __init__(self, session_id, rounds, timeout_ns=DEFAULT_TIMEOUT_NS,
                 max_consecutive_timeouts=DEFAULT_MAX_CONSECUTIVE_TIMEOUTS,
                 min_round_gap_ns=0):
        super().__init__(session_id, rounds, timeout_ns,
                         max_consecutive_timeouts)
        self.min_round_gap_ns = min_round_gap_ns
        self._next_seq = 0
        self._pending = None
        self._sent_at = None
        self._not_before = None

    @property
    def wake_time(self):
        if self._pending is None and not self.finished:
            return(self._not_before)
        return(None)

    def poll(self, now):
        if self.finished or self._pending is not None:
            return(None)
        if self._not_before is not None and now < self._not_before:
            return(None)
        return(wire.probe(self.session_id, self._next_seq))

    def sent(self, packet, now):
        self._pending = packet.seq
        self._sent_at = now
        self.deadline = now + self.timeout_ns

    def received(self, data, now):
        packet = self._parse(data)
        if packet is None or not packet.is_echo:
            return
        if packet.seq != self._pending:
            # Late echo of a round already given up on
            return
        self._record(packet.seq, now - self._sent_at)
        self.consecutive_timeouts = 0
        self._advance(self._sent_at)

    def expire(self, now):
        if self._pending is None or now < self.deadline:
            return
        logger.debug(f'Round {self._pending} timed out')
        seq = self._pending
        self._advance(self._sent_at)
        self._timed_out(f'echo {seq}')

    def _advance(self, sent_at):
        self._next_seq = self._pending + 1
        self._pending = None
        self.deadline = None
        self._not_before = (sent_at + self.min_round_gap_ns
                            if self.min_round_gap_ns else None)
        if self._next_seq >= self.rounds:
            self.finished = True


class ResponderRally(_Rally):
    """Echoes every PROBE(i) at once.

    Sample i is the time from sending ECHO(i) to receiving PROBE(i+1). A
    gap in sequence numbers marks the skipped rounds (and the round before
    the gap) timed out; the last round has no sample at all.
    """

    def __init__(self, session_id, rounds, timeout_ns=DEFAULT_TIMEOUT_NS,
                 max_consecutive_timeouts=DEFAULT_MAX_CONSECUTIVE_TIMEOUTS):
        super().__init__(session_id, rounds, timeout_ns,
                         max_consecutive_timeouts)
        self._last_seq = None
        self._echo_sent_at = None
        self._to_echo = None
        self.peer = None

    def start(self, now):
        self.deadline = now + self.timeout_ns

    def poll(self, now):
        if self._to_echo is None:
            return(None)
        return(wire.echo(self.session_id, self._to_echo))

    def sent(self, packet, now):
        self._to_echo = None
        self._echo_sent_at = now
        if packet.seq == self.rounds - 1:
            self.finish()

    def received(self, data, now, address=None):
        packet = self._parse(data)
        if packet is None or not packet.is_probe or self.finished:
            return
        seq = packet.seq
        if seq >= self.rounds:
            return
        if self._last_seq is not None and seq <= self._last_seq:
            return
        if (self._last_seq is not None and seq == self._last_seq + 1
                and self._echo_sent_at is not None):
            self._record(self._last_seq, now - self._echo_sent_at)
        if self.peer is None and address is not None:
            self.peer = address
        self._last_seq = seq
        self._echo_sent_at = None
        self._to_echo = seq
        self.consecutive_timeouts = 0
        self.deadline = now + self.timeout_ns

    def expire(self, now):
        if self.deadline is None or now < self.deadline:
            return
        self.deadline = now + self.timeout_ns
        self._timed_out('the next probe')

    def finish(self):
        self.finished = True
        self.deadline = None
        self._status[self.rounds - 1] = SampleStatus.DISCARDED
        self._rtt[self.rounds - 1] = 0


def run_udp_rally(rally, sock, peer=None, stop_socket=None):
    """Drive a rally state machine over a bound UDP socket.

    Timestamps are taken right after sendto returns and right after
    recvfrom returns, on this thread. For a responder the peer address is
    learned from the first valid probe. A readable ``stop_socket`` (the
    framed channel listener) ends a responder's rally.
    """
    watched = [sock] + ([stop_socket] if stop_socket is not None else [])
    if isinstance(rally, ResponderRally):
        rally.start(time.monotonic_ns())

    while not rally.finished:
        now = time.monotonic_ns()
        packet = rally.poll(now)
        if packet is not None:
            target = peer if peer is not None else rally.peer
            try:
                sock.sendto(packet.encode(), target)
            except ConnectionRefusedError:
                # ICMP port unreachable from an earlier send; the packet
                # counts as lost
                logger.debug(f'Peer refused {target[0]}:{target[1]}')
            rally.sent(packet, time.monotonic_ns())
            continue

        wake = [t for t in (rally.deadline, rally.wake_time) if t is not None]
        timeout = (max(0, min(wake) - now) / 1e9) if wake else None
        readable, _, _ = select.select(watched, [], [], timeout)
        if sock in readable:
            try:
                data, address = sock.recvfrom(RECV_BUFFER)
            except ConnectionRefusedError:
                continue
            arrival = time.monotonic_ns()
            if isinstance(rally, ResponderRally):
                rally.received(data, arrival, address)
            else:
                rally.received(data, arrival)
        elif stop_socket is not None and stop_socket in readable:
            logger.debug('Peer opened the framed channel; rally is over')
            rally.finish()
        else:
            rally.expire(time.monotonic_ns())

    return(rally.samples())


def rally(session_id, rounds, sock, peer=None, initiator=True,
          timeout_ns=DEFAULT_TIMEOUT_NS,
          max_consecutive_timeouts=DEFAULT_MAX_CONSECUTIVE_TIMEOUTS,
          min_round_gap_ns=0, stop_socket=None):
    """Run one endpoint's side of a rally over UDP and return its samples."""
    if initiator:
        machine = InitiatorRally(session_id, rounds, timeout_ns,
                                 max_consecutive_timeouts, min_round_gap_ns)
    else:
        machine = ResponderRally(session_id, rounds, timeout_ns,
                                 max_consecutive_timeouts)
    samples = run_udp_rally(machine, sock, peer, stop_socket)
    ok = int((samples.status == SampleStatus.OK).sum())
    logger.info(f'Rally finished: {ok} of {rounds} round trips measured')
    return(samples)


class FramedChannel:
    """Reliable, ordered frame exchange over a stream socket.

    ``exchange`` is lock-step: the initiator sends first and the responder
    answers, so neither side ever has two frames in flight.
    """

    def __init__(self, sock, initiator):
        self._sock = sock
        self.initiator = initiator
        self.frames_sent = []

    def send(self, frame):
        try:
            self._sock.sendall(frame.encode())
        except OSError as e:
            raise ChannelLossError(f'channel loss: {e}')
        self.frames_sent.append(frame)

    def _recv_exactly(self, count):
        chunks = []
        while count:
            try:
                chunk = self._sock.recv(count)
            except OSError as e:
                raise ChannelLossError(f'channel loss: {e}')
            if not chunk:
                raise ChannelLossError('channel loss: peer closed the '
                                       'connection'
                                       )
            chunks.append(chunk)
            count -= len(chunk)
        return(b''.join(chunks))

    def recv(self):
        header = self._recv_exactly(wire.FRAME_HEADER_LENGTH)
        frame_type, length = struct.unpack(wire.FRAME_HEADER_FORMAT, header)
        if length > wire.MAX_FRAME_PAYLOAD:
            raise DesyncError(f'frame of {length} bytes is too large')
        payload = self._recv_exactly(length) if length else b''
        return(wire.Frame.decode(header + payload))

    def exchange(self, frame):
        if self.initiator:
            self.send(frame)
            return(self.recv())
        reply = self.recv()
        self.send(frame)
        return(reply)

    def close(self):
        try:
            self._sock.close()
        except OSError:
            pass


def framed_port(rally_address, offset=1):
    host, port = rally_address
    return((host, port + offset))


def connect_framed_channel(address, timeout_s):
    """Initiator side: connect, retrying until ``timeout_s`` elapses."""
    give_up = time.monotonic() + timeout_s
    while True:
        try:
            sock = socket.create_connection(address, timeout=timeout_s)
            sock.settimeout(timeout_s)
            return(FramedChannel(sock, initiator=True))
        except OSError as e:
            if time.monotonic() >= give_up:
                raise ChannelLossError(f'channel loss: cannot connect to '
                                       f'{address[0]}:{address[1]}: {e}'
                                       )
            time.sleep(0.1)


def accept_framed_channel(listener, timeout_s):
    listener.settimeout(timeout_s)
    try:
        sock, address = listener.accept()
    except OSError as e:
        raise ChannelLossError(f'channel loss: no framed connection: {e}')
    sock.settimeout(timeout_s)
    logger.debug(f'Framed channel from {address[0]}:{address[1]}')
    return(FramedChannel(sock, initiator=False))

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
