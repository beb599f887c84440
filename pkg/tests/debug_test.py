import warnings

from tripletsim import debug
from tripletsim import engine
from tripletsim import kinetics
from tripletsim import spin
from tripletsim import sweeppool
from tripletsim.support import HardPulseWarning
import tests

XZ = spin.Transition('Tx', 'Tz')
FREQS = {spin.Transition('Tx', 'Ty'): 106.0, spin.Transition('Ty', 'Tz'): 1343.0, XZ: 1449.0}


def fail(item):
    raise ZeroDivisionError(item)


class TestHardPulseWarnings(tests.LimitedTestCase):
    def tearDown(self):
        debug.hard_pulse_warnings(True)
        super().tearDown()

    def test_toggle(self):
        pulse = engine.MicrowavePulse(XZ, 50.0, 0.01)
        debug.hard_pulse_warnings(False)
        with warnings.catch_warnings():
            warnings.simplefilter('error')
            engine.apply_pulse(engine.HybridState.ground(), pulse, FREQS)
        debug.hard_pulse_warnings()
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter('always')
            engine.apply_pulse(engine.HybridState.ground(), pulse, FREQS)
        assert [w.category for w in caught] == [HardPulseWarning]


class TestSweepExceptions(tests.LimitedTestCase):
    def tearDown(self):
        debug.sweep_exceptions(False)
        super().tearDown()

    def test_quiet_by_default(self):
        with tests.capture_stderr() as err:
            with tests.assert_raises(ZeroDivisionError):
                sweeppool.SweepPool(1).map(fail, [1])
        assert 'Traceback' not in err.getvalue()

    def test_prints_traceback(self):
        debug.sweep_exceptions()
        with tests.capture_stderr() as err:
            with tests.assert_raises(ZeroDivisionError):
                sweeppool.SweepPool(1).map(fail, [1])
        assert 'ZeroDivisionError' in err.getvalue()


class TestCaches(tests.LimitedTestCase):
    def test_cache_info(self):
        r = kinetics.KineticRates()
        kinetics.propagator(r, 3.0)
        kinetics.propagator(r, 3.0)
        info = debug.format_cache_info()
        assert 'propagator: CacheInfo(hits=1, misses=1' in info
        assert 'integrated_propagator' in info

    def test_clear(self):
        kinetics.propagator(kinetics.KineticRates(), 3.0)
        debug.clear_caches()
        assert kinetics.propagator.cache_info().currsize == 0
