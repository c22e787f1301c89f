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

class DomainError(ValueError):
    pass


class TranscriptError(Exception):
    pass


class KeyAgreementError(Exception):
    """Base for every cause that aborts a key agreement session."""
    cause = 'key agreement failed'

    def __init__(self, message=None):
        super().__init__(message or self.cause)


class DesyncError(KeyAgreementError):
    cause = 'protocol desynchronization'


class PlanMismatchError(KeyAgreementError):
    cause = 'plan mismatch'


class DigestMismatchError(KeyAgreementError):
    cause = 'key digest mismatch'


class ChannelLossError(KeyAgreementError):
    cause = 'channel loss'


class SecrecyImpossibleError(KeyAgreementError):
    cause = 'secrecy impossible'


class KeyMaterialError(KeyAgreementError):
    cause = 'insufficient key material'


class PlanningError(KeyAgreementError):
    cause = 'planner did not converge'
