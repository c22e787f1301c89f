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

"""Byte layouts for rally datagrams and reconciliation frames.

All multi-byte integers are big-endian. No timestamp is ever encoded.
"""

import struct
from dataclasses import dataclass

from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DesyncError
from transit_keygen.ksrt.extraction import DiscardSet

KSRT_MAGIC = b'KSRT'
KSRT_VERSION = 0x01

KSRT_KIND_PROBE = 0x01
KSRT_KIND_ECHO = 0x02
KSRT_KINDS = (KSRT_KIND_PROBE, KSRT_KIND_ECHO)

KSRT_FRAME_DISCARD_SET = 0x10
KSRT_FRAME_PARITY_VECTOR = 0x11
KSRT_FRAME_PLAN_COMMIT = 0x12
KSRT_FRAME_KEY_DIGEST = 0x13
KSRT_FRAME_TYPES = (KSRT_FRAME_DISCARD_SET, KSRT_FRAME_PARITY_VECTOR,
                    KSRT_FRAME_PLAN_COMMIT, KSRT_FRAME_KEY_DIGEST)

SESSION_ID_LENGTH = 16
DIGEST_LENGTH = 32

RALLY_FORMAT = '>4sBB16sI'
RALLY_PACKET_LENGTH = struct.calcsize(RALLY_FORMAT)  # 26
FRAME_HEADER_FORMAT = '>BI'
FRAME_HEADER_LENGTH = struct.calcsize(FRAME_HEADER_FORMAT)
PARITY_HEADER_FORMAT = '>BI'
PLAN_COMMIT_FORMAT = '>IIdd'
MAX_FRAME_PAYLOAD = 64 * 2**20


@dataclass(frozen=True)
class RallyPacket:
    kind: int
    session_id: bytes
    seq: int

    def __post_init__(self):
        if len(self.session_id) != SESSION_ID_LENGTH:
            raise ValueError(f'session id must be {SESSION_ID_LENGTH} bytes')
        if not (0 <= self.seq < 2**32):
            raise ValueError(f'sequence number out of range: {self.seq}')

    def encode(self):
        return(struct.pack(RALLY_FORMAT, KSRT_MAGIC, KSRT_VERSION, self.kind,
                           self.session_id, self.seq
                           ))

    @classmethod
    def decode(cls, data):
        """Returns None for anything that is not a well-formed packet."""
        if len(data) != RALLY_PACKET_LENGTH:
            return(None)
        magic, version, kind, session_id, seq = struct.unpack(RALLY_FORMAT,
                                                              data)
        if magic != KSRT_MAGIC or version != KSRT_VERSION:
            return(None)
        if kind not in KSRT_KINDS:
            return(None)
        return(cls(kind, session_id, seq))

    @property
    def is_probe(self):
        return(self.kind == KSRT_KIND_PROBE)

    @property
    def is_echo(self):
        return(self.kind == KSRT_KIND_ECHO)


def probe(session_id, seq):
    return(RallyPacket(KSRT_KIND_PROBE, session_id, seq))


def echo(session_id, seq):
    return(RallyPacket(KSRT_KIND_ECHO, session_id, seq))


@dataclass(frozen=True)
class Frame:
    type: int
    payload: bytes

    def encode(self):
        return(struct.pack(FRAME_HEADER_FORMAT, self.type, len(self.payload))
               + self.payload)

    @classmethod
    def decode(cls, data):
        if len(data) < FRAME_HEADER_LENGTH:
            raise DesyncError('truncated frame header')
        frame_type, length = struct.unpack(FRAME_HEADER_FORMAT,
                                           data[:FRAME_HEADER_LENGTH])
        payload = data[FRAME_HEADER_LENGTH:]
        if frame_type not in KSRT_FRAME_TYPES:
            raise DesyncError(f'unknown frame type 0x{frame_type:02x}')
        if length != len(payload):
            raise DesyncError(f'frame length {length} does not match '
                              f'{len(payload)} payload bytes'
                              )
        return(cls(frame_type, bytes(payload)))


def _expect(frame, frame_type):
    if frame.type != frame_type:
        raise DesyncError(f'expected frame 0x{frame_type:02x}, '
                          f'got 0x{frame.type:02x}'
                          )


def discard_set_frame(discards):
    indices = discards.indices
    payload = struct.pack('>I', len(indices))
    payload += struct.pack(f'>{len(indices)}I', *indices)
    return(Frame(KSRT_FRAME_DISCARD_SET, payload))


def parse_discard_set(frame):
    _expect(frame, KSRT_FRAME_DISCARD_SET)
    payload = frame.payload
    if len(payload) < 4:
        raise DesyncError('truncated discard set')
    count = struct.unpack('>I', payload[:4])[0]
    if len(payload) != 4 + 4 * count:
        raise DesyncError(f'discard set of {count} indices has '
                          f'{len(payload)} bytes'
                          )
    indices = struct.unpack(f'>{count}I', payload[4:])
    if any(a >= b for a, b in zip(indices, indices[1:])):
        raise DesyncError('discard set indices are not strictly increasing')
    return(DiscardSet.of(indices))


def parity_vector_frame(iteration, parities):
    payload = struct.pack(PARITY_HEADER_FORMAT, iteration, parities.length)
    payload += parities.to_bytes()
    return(Frame(KSRT_FRAME_PARITY_VECTOR, payload))


def parse_parity_vector(frame):
    """Returns (iteration, parities)"""
    _expect(frame, KSRT_FRAME_PARITY_VECTOR)
    header_length = struct.calcsize(PARITY_HEADER_FORMAT)
    if len(frame.payload) < header_length:
        raise DesyncError('truncated parity vector')
    iteration, bit_count = struct.unpack(PARITY_HEADER_FORMAT,
                                         frame.payload[:header_length])
    try:
        parities = BitString.from_bytes(frame.payload[header_length:],
                                        bit_count)
    except ValueError as e:
        raise DesyncError(f'bad parity vector: {e}')
    return(iteration, parities)


def plan_commit_frame(plan):
    payload = struct.pack(PLAN_COMMIT_FORMAT, plan.total_iterations,
                          plan.pa_block_size, plan.ir_target_ber,
                          plan.predicted_secrecy_bound
                          )
    return(Frame(KSRT_FRAME_PLAN_COMMIT, payload))


def parse_plan_commit(frame):
    """Returns (total_iterations, pa_block_size, ir_target_ber,
    predicted_secrecy_bound)"""
    _expect(frame, KSRT_FRAME_PLAN_COMMIT)
    if len(frame.payload) != struct.calcsize(PLAN_COMMIT_FORMAT):
        raise DesyncError('bad plan commit length')
    return(struct.unpack(PLAN_COMMIT_FORMAT, frame.payload))


def key_digest_frame(digest):
    if len(digest) != DIGEST_LENGTH:
        raise ValueError(f'digest must be {DIGEST_LENGTH} bytes')
    return(Frame(KSRT_FRAME_KEY_DIGEST, bytes(digest)))


def parse_key_digest(frame):
    _expect(frame, KSRT_FRAME_KEY_DIGEST)
    if len(frame.payload) != DIGEST_LENGTH:
        raise DesyncError('bad key digest length')
    return(frame.payload)

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
