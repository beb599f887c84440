"""Volume-normalised magnetometry sensitivity of a triplet spin ensemble.

eta_V = alpha * hbar * e / (g mu_B) / (C sqrt(rho n_avg)) * sqrt(t_overhead) / T

with e Euler's number, alpha = 1 (DC, T = T2*) or pi/2 (AC, T = T2).
Computed in SI and reported in nT um^(3/2) Hz^(-1/2).
"""
import collections
import dataclasses
import math

from tripletsim import support
from tripletsim.support import SensitivityError

__all__ = ['SensingParams', 'SensitivityResult', 'spin_density', 'eta_v', 'sweep_eta',
           'reference_sensitivity', 'PROFILES', 'PROFILE_ALIASES', 'profile', 'from_config', 'AXES', 'Z_CELL', 'V_CELL']

Z_CELL = 2
V_CELL = 617.0  # A^3
ALPHA = {'dc': 1.0, 'ac': math.pi / 2.0}

# sweepable attribute names and their short aliases
AXES = collections.OrderedDict([
    ('contrast', 'contrast'), ('C', 'contrast'),
    ('doping', 'doping'), ('c_S', 'doping'),
    ('n_avg', 'n_avg'),
    ('t_overhead', 't_overhead'),
    ('coherence', 'coherence'), ('T', 'coherence'),
])


@dataclasses.dataclass(frozen=True)
class SensingParams:
    """Inputs to eta_V; times in seconds, V_cell in cubic angstrom."""
    mode: str
    contrast: float
    doping: float
    n_avg: float
    t_overhead: float
    coherence: float
    z_cell: float = Z_CELL
    v_cell: float = V_CELL

    def __post_init__(self):
        mode = str(self.mode).lower()
        if mode not in ALPHA:
            raise SensitivityError('mode must be dc or ac, got {!r}'.format(self.mode))
        object.__setattr__(self, 'mode', mode)
        for name in ('contrast', 'doping', 'n_avg', 't_overhead', 'coherence', 'z_cell', 'v_cell'):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and math.isfinite(value) and value > 0):
                raise SensitivityError('{} must be a positive number, got {!r}'.format(name, value))
        if self.contrast > 1:
            raise SensitivityError('contrast must be <= 1, got {!r}'.format(self.contrast))
        if self.doping > 1:
            raise SensitivityError('doping must be <= 1, got {!r}'.format(self.doping))

    @property
    def alpha(self):
        return ALPHA[self.mode]

    def replace(self, **changes):
        return dataclasses.replace(self, **changes)


class SensitivityResult(collections.namedtuple('SensitivityResult', ('eta_v', 'rho_s'))):
    """eta_v in T um^(3/2) Hz^(-1/2), rho_s in spins per um^3."""
    __slots__ = ()

    @property
    def eta_v_nt(self):
        return self.eta_v * support.TESLA_TO_NT


def spin_density(c_s, z_cell=Z_CELL, v_cell=V_CELL):
    """Spins per cubic micrometre: Z_cell c_S / V_cell with V_cell in A^3."""
    if c_s < 0 or z_cell <= 0 or v_cell <= 0:
        raise SensitivityError('spin density needs c_S >= 0 and positive cell parameters')
    return z_cell * c_s / v_cell * support.ANGSTROM3_PER_UM3


def eta_v(p):
    rho_um = spin_density(p.doping, p.z_cell, p.v_cell)
    rho_si = rho_um * 1e18
    prefactor = p.alpha * support.HBAR * support.EULER / (support.G_ELECTRON * support.BOHR_MAGNETON)
    eta_si = prefactor / (p.contrast * math.sqrt(rho_si * p.n_avg)) * math.sqrt(p.t_overhead) / p.coherence
    return SensitivityResult(eta_si * support.M32_TO_UM32, rho_um)


def sweep_eta(p, axis, values):
    """Rows of (value, SensitivityResult) with *axis* set to each value."""
    try:
        name = AXES[axis]
    except KeyError:
        raise SensitivityError('cannot sweep {!r}; axes: {}'.format(axis, ', '.join(AXES)))
    return [(float(v), eta_v(p.replace(**{name: float(v)}))) for v in values]


# Volume-normalised sensitivities of established solid-state ensembles, nT um^(3/2) Hz^(-1/2)
_REFERENCE = {'dc': 34.0, 'ac': 13.0}


def reference_sensitivity(mode):
    try:
        return _REFERENCE[mode.lower()]
    except KeyError:
        raise SensitivityError('mode must be dc or ac, got {!r}'.format(mode))


_PROFILES = {
    'film': dict(contrast=0.05, doping=1e-3, n_avg=1e-3, t_overhead=350e-6, dc=120e-9, ac=750e-9),
    'crystal': dict(contrast=0.10, doping=1e-4, n_avg=1e-3, t_overhead=350e-6, dc=390e-9, ac=1.17e-6),
    'projected': dict(contrast=0.3, doping=1e-4, n_avg=1e-2, t_overhead=10e-6, dc=1e-6, ac=4e-6),
}
PROFILES = tuple(_PROFILES)
PROFILE_ALIASES = {'paper-' + name: name for name in PROFILES}


def profile(name, mode='dc'):
    """Named parameter set; the coherence time follows the mode (T2* for dc, T2 for ac)."""
    name = PROFILE_ALIASES.get(name, name)
    try:
        values = dict(_PROFILES[name])
    except KeyError:
        raise SensitivityError('unknown sensitivity profile {!r}, expected one of {}'.format(
            name, ', '.join(PROFILES)))
    mode = mode.lower()
    if mode not in ALPHA:
        raise SensitivityError('mode must be dc or ac, got {!r}'.format(mode))
    coherence = values.pop(mode)
    values.pop('ac' if mode == 'dc' else 'dc')
    return SensingParams(mode=mode, coherence=coherence, **values)


def from_config(sensing, mode=None):
    """SensingParams from a validated ``[sensing]`` section."""
    mode = (mode or sensing['mode']).lower()
    coherence = sensing['t2star_us'] if mode == 'dc' else sensing['t2_us']
    return SensingParams(mode, sensing['contrast'], sensing['doping'], sensing['n_avg'],
                         sensing['t_overhead_us'] * 1e-6, coherence * 1e-6,
                         sensing['z_cell'], sensing['v_cell'])
