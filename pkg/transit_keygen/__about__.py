__name__ = 'transit_keygen'
__description__ = ('Agree on a shared secret key with a remote peer using '
                   'the randomness of packet round-trip times. Extracts bits '
                   'from rallied UDP probes, reconciles them with bit-pair '
                   'iteration, and compresses them with block-parity '
                   'privacy amplification. Includes a chain simulator with '
                   'an eavesdropper model.'
                   )
__version__ = "1.0.0"
__url__ = ''
__author__ = 'The transit_keygen developers'
__email__ = ''
__license__ = 'GPLv2+'
__copyright__ = f'2024-2026 {__author__}'
