"""Shared constants, the exception hierarchy and small numeric helpers."""
import math

import numpy as np
from scipy import constants as _codata


def _sig6(value):
    return float('%.6g' % value)


# CODATA values rounded to 6 significant figures; every formula in the
# package reads them from here.
HBAR = _sig6(_codata.hbar)                                                 # J s
BOHR_MAGNETON = _sig6(_codata.physical_constants['Bohr magneton'][0])      # J/T
BOHR_MAGNETON_HZ_PER_T = _sig6(_codata.physical_constants['Bohr magneton in Hz/T'][0])
G_ELECTRON = 2.0
EULER = math.e

# g_e mu_B / h in MHz per mT
GAMMA_MHZ_PER_MT = G_ELECTRON * BOHR_MAGNETON_HZ_PER_T * 1e-9

ANGSTROM3_PER_UM3 = 1e12
TESLA_TO_NT = 1e9
M32_TO_UM32 = 1e9


class TripletSimError(Exception):
    """Base class of every error raised by tripletsim."""
    pass


class ConfigError(TripletSimError):
    pass


class KineticsError(TripletSimError):
    pass


class EngineError(TripletSimError):
    pass


class PresetError(TripletSimError):
    pass


class SensitivityError(TripletSimError):
    pass


class SequenceError(TripletSimError):
    """Raised by the sequence parser and validator.

    Attributes:

    line, col
        1-based source position of the offending token

    msg
        the bare message, without the position prefix
    """
    def __init__(self, msg, line, col=1):
        text = 'line {}:{}: {}'.format(line, col, msg)
        super().__init__(text)
        self.text = text
        # keep pickling working, see dagpool.PropagateError
        self.args = (msg, line, col)
        self.msg = msg
        self.line = line
        self.col = col

    def __str__(self):
        return self.text


class ZfsConventionWarning(UserWarning):
    pass


class HardPulseWarning(UserWarning):
    pass


def require_finite(values, what):
    arr = np.asarray(values, dtype=float)
    if not np.all(np.isfinite(arr)):
        raise ValueError('{} must be finite, got {!r}'.format(what, values))
    return arr


def check_non_negative(value, what, error=ValueError):
    if not value >= 0:
        raise error('{} must be >= 0, actual: {!r}'.format(what, value))
    return value
