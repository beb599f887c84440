"""Coherent control of the triplet density matrix.

The state joins singlet populations with a 3x3 triplet density matrix in the
label order Tx, Ty, Tz (field eigenstates when a field is applied). Pulses are
hard rotations in the rotating frame of one sublevel pair; free evolution runs
in the interaction picture so only detunings accumulate phase.
"""
import collections
import dataclasses
import functools
import math
import warnings

import numpy as np
from scipy import optimize

from tripletsim import kinetics
from tripletsim import spin
from tripletsim import support
from tripletsim.support import EngineError

__all__ = ['HybridState', 'MicrowavePulse', 'DecoherenceParams', 'DriveCalibration',
           'apply_pulse', 'free_evolution', 'dephasing_rates', 'optical_pump', 'ensemble_average',
           'lab_frame_propagate', 'readout', 'differential_signal', 'sigma_from_t2star',
           't2star_from_sigma']

# set from tripletsim.debug.hard_pulse_warnings()
WARN_HARD_PULSE = True
HARD_PULSE_GAP_FRACTION = 0.1
DEPHASING_RTOL = 1e-9
MIN_STEPS_PER_PERIOD = 20


class HybridState:
    """Singlet populations plus the triplet density matrix.

    Instances are treated as immutable; every operation returns a new state.
    """

    __slots__ = ('n_S0', 'n_S1', 'rho')

    def __init__(self, n_S0, n_S1, rho):
        self.n_S0 = float(n_S0)
        self.n_S1 = float(n_S1)
        r = np.array(rho, dtype=complex)
        if r.shape != (3, 3):
            raise ValueError('rho must be 3x3, actual shape: {}'.format(r.shape))
        r.setflags(write=False)
        self.rho = r

    @classmethod
    def ground(cls):
        return cls(1.0, 0.0, np.zeros((3, 3)))

    @classmethod
    def from_populations(cls, n):
        n = kinetics.LevelPopulations.from_array(n)
        return cls(n.n_S0, n.n_S1, np.diag(n.triplet))

    def populations(self):
        return kinetics.LevelPopulations(self.n_S0, self.n_S1, *np.real(np.diag(self.rho)))

    def dephased(self):
        """Copy with every triplet coherence dropped."""
        return HybridState(self.n_S0, self.n_S1, np.diag(np.diag(self.rho)))

    def total(self):
        return self.n_S0 + self.n_S1 + float(np.real(np.trace(self.rho)))

    def check(self, tol=1e-9):
        """Raise :class:`EngineError` if a state invariant is violated."""
        herm = float(np.max(np.abs(self.rho - self.rho.conj().T)))
        if herm > 1e-10:
            raise EngineError('triplet density matrix not Hermitian (deviation {:.3g})'.format(herm))
        low = float(np.min(np.linalg.eigvalsh(self.rho)))
        if low < -tol:
            raise EngineError('triplet density matrix not positive (eigenvalue {:.3g})'.format(low))
        if abs(self.total() - 1.0) > tol:
            raise EngineError('populations sum to {!r}, expected 1'.format(self.total()))
        return self

    def __repr__(self):
        pops = self.populations()
        return '<HybridState S0={:.6g} S1={:.6g} x={:.6g} y={:.6g} z={:.6g}>'.format(*pops)


class MicrowavePulse(collections.namedtuple('MicrowavePulse', ('pair', 'rabi', 'duration', 'phase', 'detuning'))):
    """Rectangular pulse: rabi and detuning in MHz, duration in ns, phase in radians."""
    __slots__ = ()

    def __new__(cls, pair, rabi, duration, phase=0.0, detuning=0.0):
        if not isinstance(pair, spin.Transition):
            pair = spin.Transition.parse(pair) if isinstance(pair, str) else spin.Transition(*pair)
        support.check_non_negative(rabi, 'Rabi frequency', EngineError)
        support.check_non_negative(duration, 'pulse duration', EngineError)
        support.require_finite((phase, detuning), 'pulse phase and detuning')
        return super().__new__(cls, pair, float(rabi), float(duration), float(phase), float(detuning))


def sigma_from_t2star(t2star):
    """Gaussian detuning spread (MHz) for a Ramsey envelope time *t2star* (us)."""
    if t2star is None or math.isinf(t2star):
        return 0.0
    if not t2star > 0:
        raise EngineError('T2* must be > 0, actual: {!r}'.format(t2star))
    return 1.0 / (math.sqrt(2.0) * math.pi * t2star)


def t2star_from_sigma(sigma):
    if sigma == 0:
        return float('inf')
    return 1.0 / (math.sqrt(2.0) * math.pi * sigma)


@dataclasses.dataclass(frozen=True)
class DecoherenceParams:
    """Homogeneous T2 per pair (us) and the inhomogeneous detuning spread (MHz).

    *t2* is stored as a sorted tuple of ``(Transition, T2)`` so instances are
    hashable; pairs that are not listed never decohere beyond their kinetics.
    """
    t2: tuple = ()
    sigma_inh: float = 0.0

    def __post_init__(self):
        items = self.t2.items() if isinstance(self.t2, dict) else self.t2
        table = {}
        for pair, value in items:
            if not isinstance(pair, spin.Transition):
                pair = spin.Transition.parse(pair) if isinstance(pair, str) else spin.Transition(*pair)
            if not float(value) > 0:
                raise EngineError('T2 must be > 0 for {}, actual: {!r}'.format(pair, value))
            table[pair] = float(value)
        support.check_non_negative(self.sigma_inh, 'sigma_inh', EngineError)
        object.__setattr__(self, 't2', tuple(sorted(table.items())))
        object.__setattr__(self, 'sigma_inh', float(self.sigma_inh))

    @classmethod
    def from_t2star(cls, t2, t2star):
        return cls(t2, sigma_from_t2star(t2star))

    def t2_for(self, pair):
        return dict(self.t2).get(pair, float('inf'))

    @property
    def t2star(self):
        return t2star_from_sigma(self.sigma_inh)


class DriveCalibration(collections.namedtuple('DriveCalibration', ('kappa',))):
    """Omega = kappa * sqrt(P)."""
    __slots__ = ()

    def __new__(cls, kappa):
        if not float(kappa) > 0:
            raise EngineError('kappa must be > 0, actual: {!r}'.format(kappa))
        return super().__new__(cls, float(kappa))

    def rabi(self, power):
        support.check_non_negative(power, 'microwave power', EngineError)
        return self.kappa * math.sqrt(power)

    def power(self, rabi):
        return (rabi / self.kappa) ** 2


def _embed(u2, pair):
    u = np.eye(3, dtype=complex)
    idx = [int(pair.lower), int(pair.upper)]
    u[np.ix_(idx, idx)] = u2
    return u


def pulse_unitary(p):
    """3x3 unitary of a hard pulse; the spectator level is left untouched."""
    t_us = p.duration * 1e-3
    omega = math.hypot(p.rabi, p.detuning)
    if omega == 0.0 or t_us == 0.0:
        return np.eye(3, dtype=complex)
    theta = math.pi * omega * t_us
    nx = p.rabi * math.cos(p.phase) / omega
    ny = p.rabi * math.sin(p.phase) / omega
    nz = p.detuning / omega
    c, s = math.cos(theta), math.sin(theta)
    u2 = np.array([[c - 1j * s * nz, -1j * s * (nx - 1j * ny)],
                   [-1j * s * (nx + 1j * ny), c + 1j * s * nz]])
    return _embed(u2, p.pair)


def _check_selective(p, frequencies):
    f_pair = frequencies[p.pair]
    if f_pair <= 1e-9:
        raise EngineError('target pair {} is degenerate'.format(p.pair))
    if not WARN_HARD_PULSE or p.rabi == 0:
        return
    gap = min(abs(f_pair - f) for t, f in frequencies.items() if t != p.pair)
    if p.rabi > HARD_PULSE_GAP_FRACTION * gap:
        warnings.warn('Rabi frequency {} MHz on {} exceeds {} x the {:.4g} MHz gap to the nearest '
                      'spectator transition; hard-pulse model may be inaccurate'.format(
                          p.rabi, p.pair, HARD_PULSE_GAP_FRACTION, gap),
                      support.HardPulseWarning, stacklevel=3)


def apply_pulse(s, p, frequencies=None):
    """Rotate the *p.pair* subspace by exp(-i 2pi H_eff t).

    H_eff = (detuning/2) sz + (rabi/2)(cos(phase) sx + sin(phase) sy), with
    sz = |a><a| - |b><b| for the lower-indexed level a. When *frequencies*
    (from :func:`tripletsim.spin.transition_frequencies`) is given, the
    pair is checked for degeneracy and for hard-pulse selectivity.
    """
    if frequencies is not None:
        _check_selective(p, frequencies)
    u = pulse_unitary(p)
    rho = u @ s.rho @ u.conj().T
    return HybridState(s.n_S0, s.n_S1, 0.5 * (rho + rho.conj().T))


_PAIR_INDEX = (spin.Transition('Tx', 'Ty'), spin.Transition('Ty', 'Tz'), spin.Transition('Tx', 'Tz'))
_LEVEL_SUMS = np.array([[1, 1, 0], [0, 1, 1], [1, 0, 1]], dtype=float)


@functools.lru_cache(maxsize=256)
def dephasing_rates(d, rates):
    """Per-level pure dephasing rates (1/us) that reproduce every listed T2.

    Solves gamma_a + gamma_b + (k_a + k_b)/2 = 1/T2(a, b) with gamma >= 0,
    which keeps the density matrix positive. Raises :class:`EngineError`
    naming the pair whose T2 cannot be met: a T2 beyond the population-decay
    limit, or a set of three rates that break the triangle inequality.
    """
    k = rates.depop
    rows, target, kin, pairs = [], [], [], []
    for row, pair in zip(_LEVEL_SUMS, _PAIR_INDEX):
        t2 = d.t2_for(pair)
        if math.isinf(t2):
            continue
        limit = 0.5 * (k[pair.lower] + k[pair.upper])
        if 1.0 / t2 < limit * (1.0 - DEPHASING_RTOL):
            raise EngineError('T2 = {:.6g} us for {} exceeds the population-decay limit {:.6g} us'.format(
                t2, pair, 1.0 / limit))
        rows.append(row)
        target.append(max(0.0, 1.0 / t2 - limit))
        kin.append(limit)
        pairs.append(pair)
    if not rows:
        return (0.0, 0.0, 0.0)
    a, b = np.array(rows), np.array(target)
    gamma, _ = optimize.nnls(a, b)
    reached = a @ gamma
    miss = np.abs(reached - b) / (b + np.array(kin))
    i = int(np.argmax(miss))
    if miss[i] > DEPHASING_RTOL:
        raise EngineError('T2 = {:.6g} us for {} is not reachable with {}; nearest consistent value {:.6g} us'.format(
            1.0 / (b[i] + kin[i]), pairs[i], ', '.join('{} {:.6g}'.format(p, t) for p, t in d.t2),
            1.0 / (reached[i] + kin[i])))
    return tuple(float(g) for g in gamma)


def _coherence_decay(d, rates, t):
    gamma = dephasing_rates(d, rates)
    k = rates.depop
    out = np.ones((3, 3))
    for a in range(3):
        for b in range(3):
            if a != b:
                out[a, b] = math.exp(-(0.5 * (k[a] + k[b]) + gamma[a] + gamma[b]) * t)
    return out


def _evolve_populations(s, rates, t):
    n = kinetics.propagator(rates, float(t)) @ s.populations().as_array()
    return n


def free_evolution(s, t, d, rates, delta_sample=0.0, pair=None):
    """Let *s* evolve for *t* microseconds with the laser off.

    Populations decay through the kinetics with the pump switched off;
    coherences decay at 1/T2 of their pair; the addressed *pair* (default
    Tx-Tz) picks up the detuning phase exp(-i 2pi delta_sample t).
    """
    if t < 0:
        raise EngineError('free evolution time must be >= 0, actual: {!r}'.format(t))
    if t == 0:
        return s
    dark = rates.with_pump(0.0)
    n = _evolve_populations(s, dark, t)
    rho = s.rho * _coherence_decay(d, dark, t)
    np.fill_diagonal(rho, n[2:])
    if delta_sample:
        pair = pair or spin.Transition('Tx', 'Tz')
        phase = np.ones(3, dtype=complex)
        phase[int(pair.lower)] = np.exp(-1j * math.pi * delta_sample * t)
        phase[int(pair.upper)] = np.exp(1j * math.pi * delta_sample * t)
        rho = phase[:, None] * rho * phase.conj()[None, :]
    return HybridState(n[0], n[1], rho)


def optical_pump(s, rates, t):
    """Laser pulse of *t* microseconds: coherences dropped, kinetics with the pump on."""
    if t < 0:
        raise EngineError('laser duration must be >= 0, actual: {!r}'.format(t))
    return HybridState.from_populations(_evolve_populations(s.dephased(), rates, t))


def readout(s, rates, t_delay, t_read):
    """Time-integrated PL over the read window after a dark delay."""
    if t_delay < 0 or t_read < 0:
        raise EngineError('readout delay and window must be >= 0, actual: {!r}, {!r}'.format(t_delay, t_read))
    if t_read == 0:
        return 0.0
    n = s.populations().as_array()
    n = kinetics.propagator(rates.with_pump(0.0), float(t_delay)) @ n
    integrated = kinetics.integrated_propagator(rates, float(t_read)) @ n
    return float(kinetics.pl_rate(integrated, rates))


def ensemble_average(experiment, d, order=21):
    """Average ``experiment(delta)`` over Gaussian static detunings.

    Uses Gauss-Hermite quadrature of the given order; *experiment* may return
    a float or an array.
    """
    if d.sigma_inh == 0:
        return experiment(0.0)
    nodes, weights = np.polynomial.hermite.hermgauss(order)
    weights = weights / math.sqrt(math.pi)
    total = None
    for x, w in zip(nodes, weights):
        value = w * np.asarray(experiment(math.sqrt(2.0) * d.sigma_inh * x), dtype=float)
        total = value if total is None else total + value
    if total.ndim == 0:
        return float(total)
    return total


def _ordered_product(mats):
    # later steps multiply from the left
    while len(mats) > 1:
        if len(mats) % 2:
            mats = np.concatenate([mats, np.eye(2, dtype=complex)[None]], axis=0)
        mats = mats[1::2] @ mats[0::2]
    return mats[0]


def lab_frame_propagate(s, carrier, rabi, t, h, pair, steps_per_period=40):
    """Integrate a linearly polarised drive without the rotating-wave approximation.

    The drive rabi * cos(2pi carrier t) couples *pair* of the eigenbasis of
    *h*. Integration runs in the interaction picture with respect to *h*
    using exponential midpoint steps; *steps_per_period* is counted against
    the fastest rotating term. The returned state is in that interaction
    picture, so its populations compare directly with :func:`apply_pulse`.
    """
    if steps_per_period < MIN_STEPS_PER_PERIOD:
        raise EngineError('need >= {} steps per carrier period, got {}'.format(
            MIN_STEPS_PER_PERIOD, steps_per_period))
    if rabi == 0 or t == 0:
        return s
    if not carrier > 0:
        raise EngineError('carrier frequency must be > 0, actual: {!r}'.format(carrier))
    e = h if isinstance(h, spin.Eigensystem) else spin.eigensystem(h)
    t_us = t * 1e-3
    omega_pair = e.energy(pair.lower) - e.energy(pair.upper)
    f_fast = carrier + abs(omega_pair)
    n_steps = max(1, int(math.ceil(t_us * f_fast * steps_per_period)))
    dt = t_us / n_steps
    tm = (np.arange(n_steps) + 0.5) * dt
    z = rabi * np.cos(2 * math.pi * carrier * tm) * np.exp(2j * math.pi * omega_pair * tm)
    mag = np.abs(z)
    angle = 2 * math.pi * mag * dt
    with np.errstate(invalid='ignore', divide='ignore'):
        unit = np.where(mag > 0, z / mag, 0.0)
    steps = np.empty((n_steps, 2, 2), dtype=complex)
    c, sn = np.cos(angle), np.sin(angle)
    steps[:, 0, 0] = c
    steps[:, 1, 1] = c
    steps[:, 0, 1] = -1j * sn * unit
    steps[:, 1, 0] = -1j * sn * unit.conj()
    u = _embed(_ordered_product(steps), pair)
    rho = u @ s.rho @ u.conj().T
    return HybridState(s.n_S0, s.n_S1, 0.5 * (rho + rho.conj().T))


def differential_signal(seq_pl, ref_pl, norm_pl=None):
    """(seq - ref) / norm, with *norm* defaulting to *ref*."""
    seq = np.asarray(seq_pl, dtype=float)
    ref = np.asarray(ref_pl, dtype=float)
    norm = ref if norm_pl is None else np.asarray(norm_pl, dtype=float)
    if np.any(norm <= 0):
        raise EngineError('reference PL must be > 0')
    out = (seq - ref) / norm
    if out.ndim == 0:
        return float(out)
    return out
