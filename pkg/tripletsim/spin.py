"""Spin-1 algebra and the triplet spin Hamiltonian.

All Hamiltonians are stored as ordinary frequencies (H/h) in MHz, in the
{|+1>, |0>, |-1>} basis. Zero-field sublevels are identified by overlap with
the analytic |Tx>, |Ty>, |Tz> states, never by energy ordering, because the
ordering flips with the sign of E.
"""
import collections
import enum
import math
import warnings

import numpy as np
from scipy.optimize import linear_sum_assignment
from scipy.spatial.transform import Rotation

from tripletsim import support

__all__ = ['Sublevel', 'Transition', 'TRANSITIONS', 'ZfsParameters', 'SpinOperatorSet',
           'MolecularOrientation', 'SpinHamiltonian', 'Eigensystem', 'spin1_operators',
           'zfs_hamiltonian', 'zeeman_hamiltonian', 'rotate_to_molecular_frame',
           'eigensystem', 'transition_frequencies', 'site_hamiltonian', 'zero_field_basis']

HERMITIAN_TOL = 1e-10
LABEL_GAP_TOL = 1e-6


class Sublevel(enum.IntEnum):
    Tx = 0
    Ty = 1
    Tz = 2

    def __str__(self):
        return self.name

    @classmethod
    def coerce(cls, value):
        if isinstance(value, cls):
            return value
        if isinstance(value, str):
            try:
                return cls[value.strip()]
            except KeyError:
                raise ValueError('unknown sublevel {!r}, expected one of Tx, Ty, Tz'.format(value))
        return cls(value)


class Transition(collections.namedtuple('Transition', ('lower', 'upper'))):
    """Unordered pair of sublevels; the lower index is always stored first."""
    __slots__ = ()

    def __new__(cls, a, b):
        a = Sublevel.coerce(a)
        b = Sublevel.coerce(b)
        if a == b:
            raise ValueError('a transition needs two distinct sublevels, got {}'.format(a))
        if a > b:
            a, b = b, a
        return super().__new__(cls, a, b)

    @classmethod
    def parse(cls, text):
        for sep in ('<->', '-', ':'):
            if sep in text:
                a, _, b = text.partition(sep)
                return cls(a, b)
        raise ValueError('cannot parse transition {!r}, expected e.g. Tx-Tz'.format(text))

    @property
    def spectator(self):
        return Sublevel(3 - self.lower - self.upper)

    def __str__(self):
        return '{}-{}'.format(self.lower.name, self.upper.name)


TRANSITIONS = (Transition('Tx', 'Ty'), Transition('Ty', 'Tz'), Transition('Tx', 'Tz'))


class ZfsParameters(collections.namedtuple('ZfsParameters', ('D', 'E'))):
    """Zero-field splitting parameters in MHz."""
    __slots__ = ()

    def __new__(cls, D, E):
        D, E = float(D), float(E)
        support.require_finite((D, E), 'ZFS parameters')
        if abs(E) > abs(D) / 3.0 + 1e-12:
            warnings.warn('|E| = {} exceeds |D|/3 = {}; not a conventional parameter set'.format(
                abs(E), abs(D) / 3.0), support.ZfsConventionWarning, stacklevel=2)
        return super().__new__(cls, D, E)


SpinOperatorSet = collections.namedtuple('SpinOperatorSet', ('Sx', 'Sy', 'Sz'))


def _build_operators():
    r = 1.0 / math.sqrt(2.0)
    sx = r * np.array([[0, 1, 0], [1, 0, 1], [0, 1, 0]], dtype=complex)
    sy = r * np.array([[0, -1j, 0], [1j, 0, -1j], [0, 1j, 0]], dtype=complex)
    sz = np.diag([1.0, 0.0, -1.0]).astype(complex)
    for m in (sx, sy, sz):
        m.setflags(write=False)
    return SpinOperatorSet(sx, sy, sz)


_OPERATORS = _build_operators()


def spin1_operators():
    """Return the spin-1 matrices in the {|+1>, |0>, |-1>} basis (hbar = 1)."""
    return _OPERATORS


def _build_zero_field_basis():
    r = 1.0 / math.sqrt(2.0)
    tx = r * np.array([-1, 0, 1], dtype=complex)
    ty = r * np.array([1j, 0, 1j], dtype=complex)
    tz = np.array([0, 1, 0], dtype=complex)
    basis = np.column_stack([tx, ty, tz])
    basis.setflags(write=False)
    return basis


_ZERO_FIELD_BASIS = _build_zero_field_basis()


def zero_field_basis():
    """Columns are |Tx>, |Ty>, |Tz> expressed in the {|+1>, |0>, |-1>} basis."""
    return _ZERO_FIELD_BASIS


class SpinHamiltonian:
    """A 3x3 Hermitian matrix in MHz. Instances are immutable."""

    __slots__ = ('matrix',)

    def __init__(self, matrix):
        m = np.array(matrix, dtype=complex)
        if m.shape != (3, 3):
            raise ValueError('SpinHamiltonian expects a 3x3 matrix, actual shape: {}'.format(m.shape))
        m.setflags(write=False)
        self.matrix = m

    def __add__(self, other):
        return SpinHamiltonian(self.matrix + other.matrix)

    def __eq__(self, other):
        return isinstance(other, SpinHamiltonian) and np.array_equal(self.matrix, other.matrix)

    __hash__ = None

    def hermiticity_error(self):
        return float(np.max(np.abs(self.matrix - self.matrix.conj().T)))

    def is_hermitian(self, tol=HERMITIAN_TOL):
        return self.hermiticity_error() < tol

    def __repr__(self):
        return 'SpinHamiltonian({!r})'.format(self.matrix.tolist())


class MolecularOrientation(collections.namedtuple('MolecularOrientation', ('alpha', 'beta', 'gamma'))):
    """Z-Y-Z Euler angles in radians, normalised to [0, 2pi).

    The rotation takes lab-frame vectors into the molecular frame.
    """
    __slots__ = ()

    def __new__(cls, alpha=0.0, beta=0.0, gamma=0.0):
        angles = [float(a) % (2 * math.pi) for a in (alpha, beta, gamma)]
        return super().__new__(cls, *angles)

    @classmethod
    def from_degrees(cls, alpha=0.0, beta=0.0, gamma=0.0):
        return cls(math.radians(alpha), math.radians(beta), math.radians(gamma))

    def matrix(self):
        return Rotation.from_euler('ZYZ', [self.alpha, self.beta, self.gamma]).as_matrix()


def rotate_to_molecular_frame(orientation, b_lab):
    """Express the lab-frame field *b_lab* (mT) in the molecular frame."""
    b = support.require_finite(b_lab, 'magnetic field')
    if b.shape != (3,):
        raise ValueError('magnetic field must be a 3-vector, actual shape: {}'.format(b.shape))
    return orientation.matrix().T @ b


def zfs_hamiltonian(p):
    """D (Sz^2 - 2/3) + E (Sx^2 - Sy^2), traceless by construction."""
    ops = spin1_operators()
    h = p.D * (ops.Sz @ ops.Sz - (2.0 / 3.0) * np.eye(3)) + p.E * (ops.Sx @ ops.Sx - ops.Sy @ ops.Sy)
    return SpinHamiltonian(h)


def zeeman_hamiltonian(b_mol):
    """(g_e mu_B / h) B.S for a molecular-frame field in mT; g_e = 2."""
    bx, by, bz = support.require_finite(b_mol, 'magnetic field')
    ops = spin1_operators()
    gamma = support.GAMMA_MHZ_PER_MT
    return SpinHamiltonian(gamma * (bx * ops.Sx + by * ops.Sy + bz * ops.Sz))


def site_hamiltonian(zfs, orientation, b_lab):
    return zfs_hamiltonian(zfs) + zeeman_hamiltonian(rotate_to_molecular_frame(orientation, b_lab))


class Eigensystem:
    """Eigen-decomposition of a spin Hamiltonian with zero-field labels.

    *energies* ascend; *states* holds the eigenvectors as columns; *labels*
    maps each :class:`Sublevel` to the column index it was assigned to.
    """

    __slots__ = ('energies', 'states', 'labels', 'degenerate')

    def __init__(self, energies, states, labels, degenerate=False):
        self.energies = energies
        self.states = states
        self.labels = labels
        self.degenerate = degenerate

    def energy(self, label):
        return float(self.energies[self.labels[Sublevel.coerce(label)]])

    def state(self, label):
        return self.states[:, self.labels[Sublevel.coerce(label)]]

    def label_energies(self):
        return np.array([self.energy(s) for s in Sublevel])

    def overlaps(self):
        """|<e_i|T_k>|^2 with rows in label order (field eigenstate descending
        from Tx first) and columns Tx, Ty, Tz."""
        basis = zero_field_basis()
        out = np.empty((3, 3))
        for s in Sublevel:
            v = self.state(s)
            out[s] = np.abs(basis.conj().T @ v) ** 2
        return out

    def __repr__(self):
        pairs = ', '.join('{}={:.6g}'.format(s.name, self.energy(s)) for s in Sublevel)
        return '<Eigensystem {}{}>'.format(pairs, ' degenerate' if self.degenerate else '')


def eigensystem(h):
    """Diagonalise *h* and label the eigenvectors by zero-field character.

    Labels come from the assignment that maximises total overlap with the
    analytic zero-field states. A gap below 1e-6 between the best and the
    second best overlap of any eigenvector (or degenerate energies) sets
    :attr:`Eigensystem.degenerate` instead of raising.
    """
    m = h.matrix if isinstance(h, SpinHamiltonian) else np.asarray(h, dtype=complex)
    energies, states = np.linalg.eigh(m)
    weights = np.abs(zero_field_basis().conj().T @ states) ** 2  # [k, j]
    rows, cols = linear_sum_assignment(-weights.T)
    labels = {Sublevel(int(k)): int(j) for j, k in zip(rows, cols)}

    ranked = np.sort(weights.T, axis=1)
    degenerate = bool(np.any(ranked[:, -1] - ranked[:, -2] < LABEL_GAP_TOL))
    scale = max(1.0, float(np.max(np.abs(energies))))
    if np.any(np.diff(energies) < 1e-12 * scale):
        degenerate = True
    return Eigensystem(energies, states, labels, degenerate)


def transition_frequencies(e):
    """Map each :class:`Transition` to |E_a - E_b| in MHz."""
    return {t: abs(e.energy(t.lower) - e.energy(t.upper)) for t in TRANSITIONS}
