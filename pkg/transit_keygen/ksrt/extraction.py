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

"""Median-threshold bit extraction from round-trip-time sequences."""

import enum
from typing import NamedTuple, Optional

import numpy as np

from transit_keygen.ksrt.bits import BitString
from transit_keygen.ksrt.errors import DomainError
from transit_keygen.ksrt.errors import KeyMaterialError


class SampleStatus(enum.IntEnum):
    OK = 0
    TIMED_OUT = 1
    # Defined by the protocol to have no measurement (responder's last)
    DISCARDED = 2


class RttSample(NamedTuple):
    index: int
    rtt: Optional[int]
    status: SampleStatus


class RttSeries:
    """Sequence of RttSample held as parallel numpy arrays.

    ``rtt`` is in nanoseconds; entries whose status is not OK hold 0 and
    read back as ``None``.
    """

    def __init__(self, rtt, status, index=None):
        self.rtt = np.array(rtt, dtype=np.int64)
        self.status = np.asarray(status, dtype=np.uint8)
        if index is None:
            index = np.arange(self.rtt.size, dtype=np.int64)
        self.index = np.asarray(index, dtype=np.int64)
        if not (self.rtt.shape == self.status.shape == self.index.shape):
            raise DomainError('rtt, status and index must have equal length')
        ok = self.status == SampleStatus.OK
        if (self.rtt[ok] <= 0).any():
            raise DomainError('round-trip times must be positive')
        self.rtt[~ok] = 0

    @classmethod
    def from_samples(cls, samples):
        samples = list(samples)
        return(cls([s.rtt if s.rtt is not None else 0 for s in samples],
                   [s.status for s in samples],
                   [s.index for s in samples]
                   ))

    @classmethod
    def from_rtts(cls, rtts):
        """All-OK series indexed from zero"""
        rtts = np.asarray(rtts, dtype=np.int64)
        return(cls(rtts, np.zeros(rtts.size, dtype=np.uint8)))

    def __len__(self):
        return(int(self.rtt.size))

    def __getitem__(self, i):
        status = SampleStatus(int(self.status[i]))
        rtt = int(self.rtt[i]) if status == SampleStatus.OK else None
        return(RttSample(int(self.index[i]), rtt, status))

    def __iter__(self):
        for i in range(len(self)):
            yield self[i]

    def __repr__(self):
        return(f'<RttSeries samples={len(self)} '
               f'ok={int((self.status == SampleStatus.OK).sum())}>'
               )


class DiscardSet(frozenset):
    """Set of round indices removed from both parties' sequences."""

    @classmethod
    def of(cls, indices, rounds=None):
        indices = [int(i) for i in indices]
        if any(i < 0 for i in indices):
            raise DomainError('discard indices must be non-negative')
        if rounds is not None and any(i >= rounds for i in indices):
            raise DomainError(f'discard index beyond {rounds} rounds')
        return(cls(indices))

    @property
    def indices(self):
        return(sorted(self))

    def __or__(self, other):
        return(DiscardSet(frozenset.__or__(self, other)))

    def __repr__(self):
        return(f'DiscardSet({self.indices})')


def _as_series(samples):
    if isinstance(samples, RttSeries):
        return(samples)
    return(RttSeries.from_samples(samples))


def local_discards(samples):
    """Indices this party could not measure: timed out or undefined."""
    series = _as_series(samples)
    if np.unique(series.index).size != series.index.size:
        raise DomainError('duplicate sample indices')
    return(DiscardSet.of(series.index[series.status != SampleStatus.OK]))


def apply_discards(samples, union_set):
    series = _as_series(samples)
    union = np.fromiter(union_set, dtype=np.int64, count=len(union_set))
    dropped = np.isin(series.index, union)
    missing = (series.status != SampleStatus.OK) & ~dropped
    if missing.any():
        raise DomainError('discard set omits locally failed indices '
                          f'{series.index[missing][:8].tolist()}'
                          )
    keep = ~dropped
    return(RttSeries(series.rtt[keep], series.status[keep],
                     series.index[keep]
                     ))


def _median(series):
    if len(series) < 2:
        raise KeyMaterialError(f'{len(series)} surviving samples; at least '
                               '2 are needed to extract bits'
                               )
    # Integer nanoseconds; an even count gives the mean of the middle two
    return(float(np.median(series.rtt)))


def extract_bits(samples):
    """Threshold each surviving RTT against this party's own median.

    Returns the bits and the DiscardSet of indices that fell exactly on the
    median; those are exchanged with the peer before they are dropped.
    """
    series = _as_series(samples)
    median = _median(series)
    tie = series.rtt == median
    bits = BitString(series.rtt[~tie] > median)
    return(bits, DiscardSet.of(series.index[tie]))


def extract_aligned_bits(samples, tie_union):
    """Bits for the surviving samples minus the union of both tie sets.

    The median is the one extract_bits used, so the result is the local
    bit string with the peer's ties removed as well.
    """
    series = _as_series(samples)
    median = _median(series)
    union = np.fromiter(tie_union, dtype=np.int64, count=len(tie_union))
    keep = ~np.isin(series.index, union)
    if (series.rtt[keep] == median).any():
        raise DomainError('tie union omits a local tie')
    return(BitString(series.rtt[keep] > median))

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
