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

"""Statistical kernels for the transit-time key agreement.

Every function here is pure. Probabilities are plain floats.
"""

import math
from dataclasses import dataclass

from transit_keygen.const import DEFAULT_Z
from transit_keygen.ksrt.errors import DomainError


def _check_probability(name, p, upper=1.0):
    if not (0.0 <= p <= upper):
        raise DomainError(f'{name} must be in [0, {upper}]: {p!r}')


@dataclass(frozen=True)
class BerInterval:
    """Confidence interval on a bit error probability.

    Ends above 0.5 are clamped to 0.5; a channel that flips more than half
    of the bits is the same channel with the output relabeled.
    """
    lo: float
    hi: float

    def __post_init__(self):
        lo = min(max(float(self.lo), 0.0), 0.5)
        hi = min(max(float(self.hi), 0.0), 0.5)
        if lo > hi:
            raise DomainError(f'empty interval [{self.lo}, {self.hi}]')
        object.__setattr__(self, 'lo', lo)
        object.__setattr__(self, 'hi', hi)

    def __contains__(self, p):
        return(self.lo <= p <= self.hi)

    @property
    def width(self):
        return(self.hi - self.lo)


@dataclass(frozen=True)
class ParityStats:
    mismatches: int
    pairs: int

    def __post_init__(self):
        if not (0 <= self.mismatches <= self.pairs):
            raise DomainError(f'invalid parity statistics: {self.mismatches} '
                              f'mismatches in {self.pairs} pairs'
                              )

    @property
    def mismatch_rate(self):
        return(self.mismatches / self.pairs if self.pairs else 0.0)


def binary_entropy(p):
    _check_probability('p', p)
    if p == 0.0 or p == 1.0:
        return(0.0)
    return(-p * math.log2(p) - (1.0 - p) * math.log2(1.0 - p))


def bsc_capacity(e):
    _check_probability('e', e)
    return(1.0 - binary_entropy(e))


def secrecy_upper_bound(e_ab):
    """Ceiling on the secret-key rate, S(X;Y||Z) <= I(X;Y), for the BSC
    induced between the endpoints with uniform inputs."""
    _check_probability('e_ab', e_ab, 0.5)
    return(bsc_capacity(e_ab))


def eavesdropper_secrecy_bound(e_ab, e_ae):
    """Tighter ceiling when the eavesdropper's raw error rate against
    Alice is known: S <= I(X;Y|Z) <= H(X|Z) <= H(e_ae)."""
    _check_probability('e_ae', e_ae, 0.5)
    return(min(secrecy_upper_bound(e_ab), binary_entropy(e_ae)))


def theoretical_ber_symmetric():
    """BER of median-thresholded T1+T2 against T2+T3 for i.i.d. hop delays
    drawn from any zero-median symmetric distribution."""
    return(1.0 / 3.0)


def pair_iteration_ber(e):
    _check_probability('e', e, 0.5)
    if e == 0.0:
        return(0.0)
    e2 = e * e
    return(e2 / (e2 + (1.0 - e) ** 2))


def inverse_pair_iteration_ber(e):
    """Channel BER whose pair-iteration output BER is ``e``."""
    _check_probability('e', e, 0.5)
    odds = math.sqrt(e / (1.0 - e))
    return(odds / (1.0 + odds))


def back_propagate(e, iterations):
    """Undo ``iterations`` rounds of pair_iteration_ber.

    Each iteration squares the error odds e/(1-e), so undoing n of them
    takes the 2**n-th root.
    """
    _check_probability('e', e, 0.5)
    if e == 0.0 or iterations == 0:
        return(e)
    log_odds = (math.log(e) - math.log1p(-e)) / 2**iterations
    odds = math.exp(log_odds)
    return(odds / (1.0 + odds))


def parity_mismatch_rate(e):
    _check_probability('e', e, 0.5)
    return(2.0 * e * (1.0 - e))


def invert_parity_mismatch(m):
    _check_probability('m', m)
    if m >= 0.5:
        return(0.5)
    return((1.0 - math.sqrt(max(0.0, 1.0 - 2.0 * m))) / 2.0)


def agresti_coull(successes, trials, z=DEFAULT_Z):
    """Agresti-Coull interval (lo, hi) on a binomial proportion."""
    if trials < 1:
        raise DomainError('Agresti-Coull interval needs at least one trial')
    if not (0 <= successes <= trials):
        raise DomainError(f'{successes} successes in {trials} trials')
    if z <= 0:
        raise DomainError(f'z must be positive: {z!r}')

    z2 = z * z
    n_tilde = trials + z2
    p_tilde = (successes + z2 / 2.0) / n_tilde
    margin = z * math.sqrt(p_tilde * (1.0 - p_tilde) / n_tilde)
    return((max(0.0, p_tilde - margin), min(1.0, p_tilde + margin)))


def ber_interval_from_parities(stats, z=DEFAULT_Z):
    lo, hi = agresti_coull(stats.mismatches, stats.pairs, z)
    # invert_parity_mismatch is increasing, so mapping the ends is exact
    return(BerInterval(invert_parity_mismatch(lo), invert_parity_mismatch(hi)))


def eve_parity_error(eps, k):
    """Error probability on the XOR of k bits, each known with error eps."""
    _check_probability('eps', eps, 0.5)
    if k < 1:
        raise DomainError(f'block size must be at least 1: {k!r}')
    if eps == 0.5:
        return(0.5)
    return(-math.expm1(k * math.log1p(-2.0 * eps)) / 2.0)

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
