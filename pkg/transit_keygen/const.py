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

MILLISECOND_NS = 10**6
MINUTE_SECONDS = 60
HOUR_SECONDS = MINUTE_SECONDS * 60

MODE_INITIATOR = 'keygen-initiator'
MODE_RESPONDER = 'keygen-responder'
MODE_SIMULATE = 'simulate'
MODE_ANALYZE = 'analyze'
MODE_OPTIONS = [MODE_INITIATOR, MODE_RESPONDER, MODE_SIMULATE, MODE_ANALYZE]
KEYGEN_MODES = [MODE_INITIATOR, MODE_RESPONDER]

FORMAT_RAW = 'raw'
FORMAT_HEX = 'hex'
FORMAT_OPTIONS = [FORMAT_RAW, FORMAT_HEX]

# The framed reconciliation stream listens one port above the rally port
DEFAULT_PORT = 47800
FRAMED_PORT_OFFSET = 1

MIN_ROUNDS = 100
DEFAULT_ROUNDS = 30000
DEFAULT_TIMEOUT_MS = 2000
DEFAULT_CONNECT_TIMEOUT_MS = 10000
DEFAULT_MAX_CONSECUTIVE_TIMEOUTS = 10
DEFAULT_MIN_ROUND_GAP_MS = 0
DEFAULT_DROP_PROB = 0.0
DEFAULT_SEED = 7
DEFAULT_SESSIONS = 1
DEFAULT_FORMAT = FORMAT_RAW

DEFAULT_EVE_BER_FLOOR = 0.01
DEFAULT_FINAL_BER = 1e-6
DEFAULT_LEAKAGE_BUDGET = 1e-3
DEFAULT_Z = 2.0
DEFAULT_ITERATION_CAP = 32
DEFAULT_BLOCK_SIZE_CAP = 4096

DEFAULT_PLANNER_SETTINGS = {'eve_ber_floor': DEFAULT_EVE_BER_FLOOR,
                            'final_ber': DEFAULT_FINAL_BER,
                            'leakage_budget': DEFAULT_LEAKAGE_BUDGET,
                            'z': DEFAULT_Z,
                            'iteration_cap': DEFAULT_ITERATION_CAP,
                            'block_size_cap': DEFAULT_BLOCK_SIZE_CAP,
                            }
DEFAULT_SESSION_SETTINGS = {'rounds': DEFAULT_ROUNDS,
                            'timeout_ms': DEFAULT_TIMEOUT_MS,
                            'connect_timeout_ms': DEFAULT_CONNECT_TIMEOUT_MS,
                            'max_consecutive_timeouts':
                                DEFAULT_MAX_CONSECUTIVE_TIMEOUTS,
                            'min_round_gap_ms': DEFAULT_MIN_ROUND_GAP_MS,
                            'drop_prob': DEFAULT_DROP_PROB,
                            }

# Default simulated chain: Alice - Eve (same local network) - relay - Bob.
# Each hop is (name, location, scale); locations only keep delays positive.
DEFAULT_LAN_SCALE_NS = 100_000
DEFAULT_WAN_SCALE_NS = 500_000
DEFAULT_HOPS = (('alice-eve', MILLISECOND_NS, DEFAULT_LAN_SCALE_NS),
                ('eve-relay', 75 * MILLISECOND_NS, DEFAULT_WAN_SCALE_NS),
                ('relay-bob', 100 * MILLISECOND_NS, DEFAULT_WAN_SCALE_NS),
                )
DEFAULT_EVE_POSITION = 1
# Eavesdropper timestamping noise as a fraction of the WAN scale. With the
# LAN hop above her raw BER is about 4.6% and stays above 1% after the
# endpoints have reconciled down to 0.1%.
DEFAULT_EVE_JITTER_FRACTION = 0.05
