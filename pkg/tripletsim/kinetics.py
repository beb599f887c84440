"""Five-level incoherent photophysics: S0, S1 and the three triplet sublevels.

Populations are ordered ``(S0, S1, Tx, Ty, Tz)``; rates are in inverse
microseconds and times in microseconds. In a magnetic field the triplet
entries refer to the field eigenstates, listed in the order of the zero-field
sublevel each one descends from (see :meth:`tripletsim.spin.Eigensystem.overlaps`).
"""
import collections
import dataclasses
import functools
import logging

import numpy as np
from scipy import integrate, linalg

from tripletsim import spin
from tripletsim import support
from tripletsim.support import KineticsError

__all__ = ['KineticRates', 'LevelPopulations', 'MicrowaveMixing', 'rate_matrix', 'evolve',
           'propagator', 'integrated_propagator', 'steady_state', 'pl_rate', 'project_rates',
           'cw_contrast', 'cw_odmr_contrast', 'DEFAULT_LIFETIMES', 'PULSED_PUMP_RATE', 'CW_PUMP_RATE']

log = logging.getLogger('tripletsim.kinetics')

S0, S1 = 0, 1
TRIPLET = slice(2, 5)

DEFAULT_LIFETIMES = (35.0, 120.0, 250.0)
DEFAULT_BRANCHING = (0.76, 0.16, 0.08)
PULSED_PUMP_RATE = 0.05
# calibrated so that strong Tx-Tz mixing gives about -0.2% cw contrast
CW_PUMP_RATE = 6.4e-4


def _default_depop():
    return tuple(1.0 / tau for tau in DEFAULT_LIFETIMES)


@dataclasses.dataclass(frozen=True)
class KineticRates:
    """Pump, fluorescence, ISC branching and triplet depopulation rates.

    Instances are hashable so propagators can be cached per rate set.
    """
    pump_rate: float = PULSED_PUMP_RATE
    s1_decay_rate: float = 100.0
    isc_yield: float = 0.63
    branching: tuple = DEFAULT_BRANCHING
    depop: tuple = dataclasses.field(default_factory=_default_depop)

    def __post_init__(self):
        branching = tuple(float(p) for p in self.branching)
        depop = tuple(float(k) for k in self.depop)
        if len(branching) != 3 or len(depop) != 3:
            raise KineticsError('branching and depop need one entry per triplet sublevel')
        for name in ('pump_rate', 's1_decay_rate', 'isc_yield'):
            support.check_non_negative(getattr(self, name), name, KineticsError)
        for value in branching + depop:
            support.check_non_negative(value, 'triplet rate', KineticsError)
        if self.isc_yield > 1:
            raise KineticsError('isc_yield must be <= 1, actual: {!r}'.format(self.isc_yield))
        total = sum(branching)
        if abs(total - 1.0) > 1e-9:
            raise KineticsError('branching must sum to 1, actual sum: {!r}'.format(total))
        branching = tuple(p / total for p in branching)
        object.__setattr__(self, 'pump_rate', float(self.pump_rate))
        object.__setattr__(self, 's1_decay_rate', float(self.s1_decay_rate))
        object.__setattr__(self, 'isc_yield', float(self.isc_yield))
        object.__setattr__(self, 'branching', branching)
        object.__setattr__(self, 'depop', depop)

    @classmethod
    def from_lifetimes(cls, lifetimes, **kwargs):
        return cls(depop=tuple(1.0 / tau if tau > 0 else float('inf') for tau in lifetimes), **kwargs)

    def with_pump(self, rate):
        return dataclasses.replace(self, pump_rate=rate)


class LevelPopulations(collections.namedtuple('LevelPopulations', ('n_S0', 'n_S1', 'n_x', 'n_y', 'n_z'))):
    __slots__ = ()

    @classmethod
    def ground(cls):
        return cls(1.0, 0.0, 0.0, 0.0, 0.0)

    @classmethod
    def from_array(cls, values):
        return cls(*(float(v) for v in values))

    def as_array(self):
        return np.array(self, dtype=float)

    @property
    def triplet(self):
        return np.array(self[2:], dtype=float)

    def is_valid(self, tol=1e-9):
        arr = self.as_array()
        return bool(np.all(arr >= -tol) and np.all(arr <= 1 + tol) and abs(arr.sum() - 1) <= tol)


class MicrowaveMixing(collections.namedtuple('MicrowaveMixing', ('pair', 'rate'))):
    """Incoherent saturation mixing at *rate* (1/us) between a sublevel pair."""
    __slots__ = ()

    def __new__(cls, pair, rate):
        if not isinstance(pair, spin.Transition):
            pair = spin.Transition.parse(pair) if isinstance(pair, str) else spin.Transition(*pair)
        support.check_non_negative(rate, 'mixing rate', KineticsError)
        return super().__new__(cls, pair, float(rate))


def _project(rates, overlaps):
    w = np.asarray(overlaps, dtype=float)
    branching = w @ np.array(rates.branching)
    depop = w @ np.array(rates.depop)
    branching = branching / branching.sum()
    return dataclasses.replace(rates, branching=tuple(branching), depop=tuple(depop))


def project_rates(e, rates):
    """Re-express branching and depopulation rates in the eigenbasis of *e*.

    p_i(B) = sum_k |<e_i|T_k>|^2 p_k and likewise for k_i(B).
    """
    return _project(rates, e.overlaps())


def _mixings(mix):
    if mix is None:
        return ()
    if isinstance(mix, MicrowaveMixing):
        return (mix,)
    return tuple(mix)


def rate_matrix(rates, mix=None, overlaps=None):
    """Build the 5x5 population-conserving generator (columns sum to zero).

    *mix* is a :class:`MicrowaveMixing` or an iterable of them; *overlaps*
    projects the rates onto field eigenstates first.
    """
    if overlaps is not None:
        rates = _project(rates, overlaps)
    gp, gf, phi = rates.pump_rate, rates.s1_decay_rate, rates.isc_yield
    g = np.zeros((5, 5))
    g[S1, S0] += gp
    g[S0, S0] -= gp
    g[S0, S1] += (1.0 - phi) * gf
    g[S1, S1] -= gf
    for i, (p, k) in enumerate(zip(rates.branching, rates.depop)):
        g[2 + i, S1] += phi * gf * p
        g[S0, 2 + i] += k
        g[2 + i, 2 + i] -= k
    for m in _mixings(mix):
        a, b = 2 + int(m.pair.lower), 2 + int(m.pair.upper)
        g[a, a] -= m.rate
        g[b, a] += m.rate
        g[b, b] -= m.rate
        g[a, b] += m.rate
    return g


@functools.lru_cache(maxsize=4096)
def propagator(rates, t, mix=None):
    """Cached exp(G t) for the generator of *rates* (and optional mixing)."""
    if t < 0:
        raise KineticsError('evolution time must be >= 0, actual: {!r}'.format(t))
    out = linalg.expm(rate_matrix(rates, mix) * t)
    out.setflags(write=False)
    return out


@functools.lru_cache(maxsize=1024)
def integrated_propagator(rates, t):
    """Cached integral of exp(G s) for s in [0, t], via an augmented exponential."""
    if t < 0:
        raise KineticsError('integration window must be >= 0, actual: {!r}'.format(t))
    g = rate_matrix(rates)
    block = np.zeros((10, 10))
    block[:5, :5] = g
    block[:5, 5:] = np.eye(5)
    out = linalg.expm(block * t)[:5, 5:].copy()
    out.setflags(write=False)
    return out


def evolve(n, t, gen, method='expm'):
    """Propagate populations *n* for *t* microseconds under generator *gen*.

    ``method='expm'`` uses the matrix exponential; ``method='rk'`` integrates
    adaptively (DOP853, rtol 1e-9) and raises :class:`KineticsError` if the
    step size underflows.
    """
    if t < 0:
        raise KineticsError('evolution time must be >= 0, actual: {!r}'.format(t))
    n0 = np.asarray(n, dtype=float)
    if t == 0:
        return LevelPopulations.from_array(n0)
    if method == 'expm':
        out = linalg.expm(np.asarray(gen) * t) @ n0
    elif method == 'rk':
        sol = integrate.solve_ivp(lambda _, y: gen @ y, (0.0, t), n0, method='DOP853',
                                  rtol=1e-9, atol=1e-13)
        if not sol.success:
            raise KineticsError('rate-equation integration failed: {}'.format(sol.message))
        out = sol.y[:, -1]
    else:
        raise ValueError('unknown evolution method {!r}'.format(method))
    return LevelPopulations.from_array(out)


def steady_state(gen):
    """Normalised null vector of *gen*; a disconnected graph is an error."""
    space = linalg.null_space(np.asarray(gen, dtype=float))
    if space.shape[1] != 1:
        raise KineticsError('steady state is not unique (null space dimension {})'.format(space.shape[1]))
    v = space[:, 0]
    v = v / v.sum()
    return LevelPopulations.from_array(v)


def pl_rate(n, rates):
    """Photoluminescence rate, Gamma_f (1 - phi) n_S1."""
    return rates.s1_decay_rate * (1.0 - rates.isc_yield) * n[S1]


def cw_contrast(rates, mix):
    """(PL_on - PL_off) / PL_off for steady states with and without *mix*."""
    mixings = _mixings(mix)
    off = pl_rate(steady_state(rate_matrix(rates)), rates)
    if not any(m.rate > 0 for m in mixings):
        return 0.0
    on = pl_rate(steady_state(rate_matrix(rates, mixings)), rates)
    return (on - off) / off


def cw_odmr_contrast(pair, mixing_rate, b_lab=(0.0, 0.0, 0.0), site=None, rates=None, zfs=None):
    """cw-ODMR contrast of saturating *pair* at *mixing_rate* for one site.

    Rates are projected onto the eigenstates at the lab-frame field *b_lab*
    (mT). Defaults are the calibrated cw pump rate and the pentacene ZFS.
    """
    if rates is None:
        rates = KineticRates(pump_rate=CW_PUMP_RATE)
    if zfs is None:
        zfs = spin.ZfsParameters(1396.0, -53.0)
    if site is None:
        site = spin.MolecularOrientation()
    e = spin.eigensystem(spin.site_hamiltonian(zfs, site, b_lab))
    if e.degenerate:
        log.debug('ambiguous sublevel labels at B = %r', b_lab)
    projected = project_rates(e, rates)
    return cw_contrast(projected, MicrowaveMixing(pair, mixing_rate))
