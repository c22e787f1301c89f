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

from transit_keygen.ksrt.errors import DomainError


class BitString:
    """Sequence of key bits.

    Bits are held unpacked (one uint8 per bit) so the protocol stages can
    work on them with numpy; ``to_bytes`` gives the packed form, MSB first,
    with zero padding in the last byte.
    """
    __slots__ = ('_bits',)

    def __init__(self, bits=()):
        array = np.array(bits, dtype=np.uint8).ravel()
        if array.size and array.max() > 1:
            raise DomainError('bit values must be 0 or 1')
        self._bits = array

    @classmethod
    def from_str(cls, text):
        digits = [c for c in text if not c.isspace()]
        if any(c not in '01' for c in digits):
            raise DomainError(f'not a bit string: {text!r}')
        return cls([int(c) for c in digits])

    @classmethod
    def from_bytes(cls, data, length):
        if length < 0 or len(data) != (length + 7) // 8:
            raise DomainError(f'{len(data)} bytes cannot hold exactly '
                              f'{length} bits'
                              )
        unpacked = np.unpackbits(np.frombuffer(bytes(data), dtype=np.uint8))
        if unpacked[length:].any():
            raise DomainError('nonzero padding after last bit')
        return cls(unpacked[:length])

    def to_bytes(self):
        return(np.packbits(self._bits).tobytes())

    @property
    def array(self):
        """Read-only view of the bits"""
        view = self._bits.view()
        view.flags.writeable = False
        return(view)

    @property
    def length(self):
        return(int(self._bits.size))

    def __len__(self):
        return(self.length)

    def __iter__(self):
        return(iter(int(b) for b in self._bits))

    def __getitem__(self, key):
        if isinstance(key, slice):
            return(BitString(self._bits[key]))
        return(int(self._bits[key]))

    def __eq__(self, other):
        if not isinstance(other, BitString):
            return(NotImplemented)
        return(np.array_equal(self._bits, other._bits))

    __hash__ = None

    def __xor__(self, other):
        if self.length != other.length:
            raise DomainError(f'cannot XOR {self.length} bits with '
                              f'{other.length} bits'
                              )
        return(BitString(self._bits ^ other._bits))

    def count_ones(self):
        return(int(self._bits.sum(dtype=np.int64)))

    def errors_against(self, other):
        """Fraction of positions that differ from ``other``"""
        if self.length == 0:
            return(0.0)
        return((self ^ other).count_ones() / self.length)

    def wipe(self):
        """Overwrite the bits in place and truncate"""
        self._bits.fill(0)
        self._bits = np.zeros(0, dtype=np.uint8)

    def __str__(self):
        return(''.join('1' if b else '0' for b in self._bits))

    def __repr__(self):
        text = str(self)
        if len(text) > 32:
            text = text[:32] + '...'
        return(f'<BitString length={self.length}:{text}>')
