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

"""Block-parity privacy amplification and key confirmation."""

import hashlib
import hmac
import struct
from dataclasses import dataclass

import numpy as np

from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DigestMismatchError
from transit_keygen.ksrt.errors import DomainError

# Same on both endpoints, so the digest does not depend on role
DIGEST_TAG = b'KSRT final key v1'


@dataclass
class FinalKey:
    key: BitString
    digest: bytes
    source_session: bytes

    def key_bytes(self):
        return(self.key.to_bytes())

    def destroy(self):
        self.key.wipe()
        self.digest = b''


def parity_compress(bits, k):
    """XOR of each full block of k bits; a partial last block is dropped."""
    if k < 1:
        raise DomainError(f'block size must be at least 1: {k!r}')
    blocks = bits.length // k
    array = bits.array[:blocks * k].reshape(blocks, k)
    return(BitString(np.bitwise_xor.reduce(array, axis=1)
                     if blocks else []))


def key_digest(key, session_id):
    h = hashlib.sha256()
    h.update(struct.pack('>I', key.length))
    h.update(key.to_bytes())
    h.update(session_id)
    h.update(DIGEST_TAG)
    return(h.digest())


def make_final_key(reconciled, k, session_id):
    key = parity_compress(reconciled, k)
    return(FinalKey(key, key_digest(key, session_id), session_id))


def verify_key(local, remote_digest):
    """True when the peer's digest matches; otherwise the key is destroyed
    and DigestMismatchError raised."""
    if hmac.compare_digest(local.digest, bytes(remote_digest)):
        return(True)
    local.destroy()
    raise DigestMismatchError('key digest mismatch: the endpoints hold '
                              'different keys'
                              )

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
