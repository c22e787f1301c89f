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

from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DigestMismatchError
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.privacyamp import key_digest
from transit_keygen.ksrt.privacyamp import make_final_key
from transit_keygen.ksrt.privacyamp import parity_compress
from transit_keygen.ksrt.privacyamp import verify_key

SESSION_ID = bytes(range(16))


class TestParityCompress:

    def test_blocks(self):

        bits = BitString.from_str('10110110')
        assert str(parity_compress(bits, 4)) == '10'
        assert str(parity_compress(bits, 2)) == '1001'

    def test_identity(self):

        bits = BitString.from_str('1011011')
        assert parity_compress(bits, 1) == bits

    def test_partial_block_dropped(self):

        bits = BitString.from_str('1111111111')
        assert str(parity_compress(bits, 4)) == '00'
        assert parity_compress(BitString.from_str('101'), 4).length == 0

    def test_linear(self):

        rng = np.random.default_rng(7)
        a = BitString(rng.integers(0, 2, 1000))
        b = BitString(rng.integers(0, 2, 1000))
        assert parity_compress(a ^ b, 9) == \
            parity_compress(a, 9) ^ parity_compress(b, 9)

    def test_bad_block_size(self):

        with pytest.raises(DomainError):
            parity_compress(BitString.from_str('1010'), 0)

    def test_removes_bias(self):

        # Ones with probability 0.3; blocks of 16 leave a bias of 0.6**16/2
        rng = np.random.default_rng(11)
        n = 16 * 20000
        bits = BitString(rng.random(n) < 0.3)
        key = parity_compress(bits, 16)
        ones = key.count_ones() / key.length
        sigma = 0.5 / np.sqrt(key.length)
        assert abs(ones - 0.5) < 4 * sigma

    def test_output_is_uniform(self):

        # 4-bit symbols of the key against 15 degrees of freedom at p=0.001
        rng = np.random.default_rng(12)
        bits = BitString(rng.random(16 * 40000) < 0.3)
        key = parity_compress(bits, 16)
        symbols = key.array.reshape(-1, 4).astype(np.int64) @ [8, 4, 2, 1]
        observed = np.bincount(symbols, minlength=16)
        expected = symbols.size / 16
        chi_square = float(((observed - expected)**2 / expected).sum())
        assert chi_square < 37.70


class TestKeyConfirmation:

    def test_same_key_same_digest(self):

        reconciled = BitString.from_str('1011010011101001' * 8)
        alice = make_final_key(reconciled, 4, SESSION_ID)
        bob = make_final_key(BitString(reconciled.array), 4, SESSION_ID)
        assert alice.key == bob.key
        assert alice.key.length == 32
        assert len(alice.key_bytes()) == 4
        assert verify_key(alice, bob.digest)

    def test_digest_binds_session(self):

        key = BitString.from_str('10110')
        assert key_digest(key, SESSION_ID) != key_digest(key, bytes(16))
        assert len(key_digest(key, SESSION_ID)) == 32

    def test_digest_binds_length(self):

        assert key_digest(BitString.from_str('1'), SESSION_ID) != \
            key_digest(BitString.from_str('10'), SESSION_ID)

    def test_mismatch_destroys_key(self):

        alice = make_final_key(BitString.from_str('11110000'), 2, SESSION_ID)
        bob = make_final_key(BitString.from_str('11110001'), 2, SESSION_ID)
        with pytest.raises(DigestMismatchError):
            verify_key(alice, bob.digest)
        assert alice.key.length == 0
        assert alice.digest == b''

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
