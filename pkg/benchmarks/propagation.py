import contextlib

import benchmarks
from tripletsim import engine
from tripletsim import kinetics
from tripletsim import spin

XZ = spin.Transition('Tx', 'Tz')
RATES = kinetics.KineticRates()
DECOHERENCE = engine.DecoherenceParams({XZ: 1.17}, engine.sigma_from_t2star(0.39))


@contextlib.contextmanager
def pumped_state(n):
    yield engine.optical_pump(engine.HybridState.ground(), RATES, 10.0)


def benchmark_eigensystem():
    spin.eigensystem(spin.site_hamiltonian(spin.ZfsParameters(1396.0, -53.0), spin.MolecularOrientation(),
                                           (10.0, 20.0, 30.0)))


def benchmark_propagator_cold():
    kinetics.propagator(RATES, 50.0)


@benchmarks.configure(warm=True)
def benchmark_propagator_cached():
    kinetics.propagator(RATES, 50.0)


def benchmark_steady_state():
    kinetics.steady_state(kinetics.rate_matrix(RATES, kinetics.MicrowaveMixing(XZ, 1.0)))


@benchmarks.configure(manager=pumped_state, warm=True)
def benchmark_pulse_wait_read(state):
    s = engine.apply_pulse(state, engine.MicrowavePulse(XZ, 5.0, 50.0))
    s = engine.free_evolution(s, 0.3, DECOHERENCE, RATES, 0.5, XZ)
    engine.readout(s, RATES, 50.0, 10.0)
