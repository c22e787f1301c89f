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

import math
from transit_keygen.const import HOUR_SECONDS
from transit_keygen.const import MINUTE_SECONDS


def duration(seconds):

    if seconds < MINUTE_SECONDS:
        # Sub-minute sessions are common in simulation
        return(f'{seconds:.2f} seconds')

    duration_text = ''
    remaining_seconds = int(seconds)

    if remaining_seconds >= HOUR_SECONDS:
        hours = math.floor(remaining_seconds/HOUR_SECONDS)
        remaining_seconds = remaining_seconds - (hours * HOUR_SECONDS)

        duration_text += f'{hours} '
        duration_text += ('hour' if hours == 1 else 'hours')

    if remaining_seconds >= MINUTE_SECONDS:
        minutes = math.floor(remaining_seconds/MINUTE_SECONDS)
        remaining_seconds = remaining_seconds - (minutes * MINUTE_SECONDS)

        if duration_text:
            duration_text += ', '
        duration_text += f'{minutes} '
        duration_text += ('minute' if minutes == 1 else 'minutes')

    if remaining_seconds > 0:
        if duration_text:
            duration_text += ', '
        duration_text += f'{remaining_seconds} '
        duration_text += ('second' if remaining_seconds == 1 else 'seconds')

    return(duration_text)

# End duration


def bits(count):
    return(f'{count} bit' if count == 1 else f'{count} bits')

# End bits


def ber(value, digits=4):
    """Error rate for display; None reads as n/a"""

    if value is None:
        return('n/a')
    if value != 0 and value < 10**-digits:
        return(f'{value:.{digits - 1}e}')
    return(f'{value:.{digits}f}')

# End ber

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
