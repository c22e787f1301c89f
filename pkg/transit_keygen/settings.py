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

import collections.abc
import configparser
import re

from .const import DEFAULT_PLANNER_SETTINGS
from .const import DEFAULT_SESSION_SETTINGS
from .const import FORMAT_OPTIONS
from .const import MIN_ROUNDS
from .ksrt.planner import PlannerConfig
from .ksrt.wire import SESSION_ID_LENGTH

hostport_pattern = re.compile(r'^(?P<host>\[[^]]+\]|[^:]*):(?P<port>\d+)$')

PLANNER_SECTION = 'planner'
SESSION_SECTION = 'session'


class CaseInsensitiveDict(collections.abc.MutableMapping):
    """ Ordered case insensitive mutable mapping class. """
    def __init__(self, *args, **kwargs):
        self._d = collections.OrderedDict(*args, **kwargs)
        self._convert_keys()

    def _convert_keys(self):
        for k in list(self._d.keys()):
            v = self._d.pop(k)
            self._d.__setitem__(k.lower(), v)

    def __len__(self):
        return len(self._d)

    def __iter__(self):
        return iter(self._d)

    def __setitem__(self, k, v):
        self._d[k.lower()] = v

    def __getitem__(self, k):
        return self._d[k.lower()]

    def __delitem__(self, k):
        del self._d[k.lower()]

    def copy(self):
        return self._d.copy()

# End CaseInsensitiveDict


def probability(string):
    try:
        value = float(string)
    except Exception:
        raise ValueError()
    if (value <= 0) or (value >= 0.5):
        raise ValueError()
    return(value)


def validate_probability(string, name='probability'):
    try:
        value = probability(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid {name} value: {string!r}')


def positive(string):
    try:
        value = float(string)
    except Exception:
        raise ValueError()
    if (value <= 0):
        raise ValueError()
    return(value)


def validate_positive(string, name='positive'):
    try:
        value = positive(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid {name} value: {string!r}')


def drop_prob(string):
    try:
        value = float(string)
    except Exception:
        raise ValueError()
    if (value < 0) or (value >= 1):
        raise ValueError()
    return(value)


def validate_drop_prob(string):
    try:
        value = drop_prob(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid drop_prob value: {string!r}')


def rounds(string):
    try:
        value = int(string)
    except Exception:
        raise ValueError()
    if (value < MIN_ROUNDS):
        raise ValueError()
    return(value)


def validate_rounds(string):
    try:
        value = rounds(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid rounds value: {string!r} (at least '
                         f'{MIN_ROUNDS})'
                         )


def milliseconds(string):
    try:
        value = int(string)
    except Exception:
        raise ValueError()
    if (value <= 0):
        raise ValueError()
    return(value)


def validate_milliseconds(string, name='milliseconds'):
    try:
        value = milliseconds(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid {name} value: {string!r}')


def count(string):
    try:
        value = int(string)
    except Exception:
        raise ValueError()
    if (value < 0):
        raise ValueError()
    return(value)


def validate_count(string, name='count'):
    try:
        value = count(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid {name} value: {string!r}')


def positive_count(string):
    value = count(string)
    if (value < 1):
        raise ValueError()
    return(value)


def validate_positive_count(string, name='count'):
    try:
        value = positive_count(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid {name} value: {string!r}')


def iteration_cap(string):
    value = count(string)
    if (value < 1) or (value > 255):
        raise ValueError()
    return(value)


def validate_iteration_cap(string):
    try:
        value = iteration_cap(string)
        return(value)
    except Exception:
        raise ValueError(f'invalid iteration_cap value: {string!r}')


def session_id(string):
    try:
        value = bytes.fromhex(string)
    except Exception:
        raise ValueError()
    if len(value) != SESSION_ID_LENGTH:
        raise ValueError()
    return(value)


def hostport(string):
    m = hostport_pattern.match(string)
    if m is None:
        raise ValueError()
    host = m.group('host').strip('[]') or '0.0.0.0'
    port = int(m.group('port'))
    if port > 65535:
        raise ValueError()
    return((host, port))


def key_format(string):
    if string not in FORMAT_OPTIONS:
        raise ValueError()
    return(string)

# End key_format


SETTING_VALIDATORS = {
    PLANNER_SECTION: {
        'eve_ber_floor':
            lambda s: validate_probability(s, 'eve_ber_floor'),
        'final_ber': lambda s: validate_probability(s, 'final_ber'),
        'leakage_budget': lambda s: validate_positive(s, 'leakage_budget'),
        'z': lambda s: validate_positive(s, 'z'),
        'iteration_cap': validate_iteration_cap,
        'block_size_cap':
            lambda s: validate_positive_count(s, 'block_size_cap'),
        },
    SESSION_SECTION: {
        'rounds': validate_rounds,
        'timeout_ms': lambda s: validate_milliseconds(s, 'timeout_ms'),
        'connect_timeout_ms':
            lambda s: validate_milliseconds(s, 'connect_timeout_ms'),
        'max_consecutive_timeouts':
            lambda s: validate_positive_count(s,
                                            'max_consecutive_timeouts'),
        'min_round_gap_ms':
            lambda s: validate_count(s, 'min_round_gap_ms'),
        'drop_prob': validate_drop_prob,
        },
    }

# Command-line flags that override a setting of the same name
ARG_OVERRIDES = {
    PLANNER_SECTION: ['eve_ber_floor', 'final_ber', 'leakage_budget', 'z'],
    SESSION_SECTION: ['rounds', 'timeout_ms', 'drop_prob'],
    }


class Settings(collections.UserDict):
    """Defaults, then the configuration file, then command-line flags.

    ``settings['planner']`` is a PlannerConfig and ``settings['session']``
    a dict of session options; each is resolved on first access.
    """
    _config = None

    def __init__(self, args, conf_file_path=None):
        super().__init__()
        self._args = args
        self._config = configparser.ConfigParser(dict_type=CaseInsensitiveDict)
        if conf_file_path is not None:
            section_name = configparser.DEFAULTSECT
            try:
                self._config.read(conf_file_path)
                for section_name, config_section in self._config.items():
                    for validators in SETTING_VALIDATORS.values():
                        for key, validate in validators.items():
                            if key in config_section:
                                validate(self._config.get(section_name, key))
            except configparser.Error as e:
                raise ValueError(f'Configuration file {conf_file_path}: '
                                 f'{e.message}'
                                 )
            except ValueError as e:
                raise ValueError('Configuration file section '
                                 f'"{section_name}": {str(e)}'
                                 )

    # End __init__

    def __getitem__(self, key):
        if key not in self.data:
            if key == PLANNER_SECTION:
                self._resolve_planner_settings()
            elif key == SESSION_SECTION:
                self._resolve_session_settings()
        return self.data[key]

    def _parse_conf(self, section_type, section_settings):

        # A missing section still picks up the DEFAULT section
        if self._config.has_section(section_type):
            section = section_type
        else:
            section = configparser.DEFAULTSECT

        for key, validate in SETTING_VALIDATORS[section_type].items():
            value = self._config.get(section, key, fallback=None)
            if value is not None and value != '':
                section_settings[key] = validate(value)

    # End _parse_conf

    def _apply_args(self, section_type, section_settings):
        for key in ARG_OVERRIDES[section_type]:
            value = getattr(self._args, key, None)
            if value is not None:
                section_settings[key] = value

    def _resolve_planner_settings(self):

        planner_settings = DEFAULT_PLANNER_SETTINGS.copy()
        self._parse_conf(PLANNER_SECTION, planner_settings)
        self._apply_args(PLANNER_SECTION, planner_settings)

        self.data[PLANNER_SECTION] = PlannerConfig(
            eve_ber_floor=planner_settings['eve_ber_floor'],
            final_key_ber_target=planner_settings['final_ber'],
            per_bit_leakage_budget=planner_settings['leakage_budget'],
            z=planner_settings['z'],
            iteration_cap=planner_settings['iteration_cap'],
            block_size_cap=planner_settings['block_size_cap'],
            )

    # End _resolve_planner_settings

    def _resolve_session_settings(self):

        session_settings = DEFAULT_SESSION_SETTINGS.copy()
        self._parse_conf(SESSION_SECTION, session_settings)
        self._apply_args(SESSION_SECTION, session_settings)

        self.data[SESSION_SECTION] = session_settings

    # End _resolve_session_settings

# vim: set tabstop=8 softtabstop=0 expandtab shiftwidth=4 smarttab ai :
