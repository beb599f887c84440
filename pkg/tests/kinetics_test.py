import numpy as np
from hypothesis import given, settings, strategies as st

from tripletsim import kinetics
from tripletsim import spin
from tripletsim.support import KineticsError
import tests

XZ = spin.Transition('Tx', 'Tz')
XY = spin.Transition('Tx', 'Ty')
YZ = spin.Transition('Ty', 'Tz')


def rk4_richardson(g, n0, t, steps=64000, levels=5):
    """Fixed-step RK4 at *levels* halvings of the step, Richardson-extrapolated."""
    estimates = []
    for k in range(levels):
        n = steps * 2 ** k
        hg = np.asarray(g) * (t / n)
        step, term = np.eye(5), np.eye(5)
        for j in range(1, 5):
            term = term @ hg / j
            step = step + term
        estimates.append(np.linalg.matrix_power(step, n) @ n0)
    # global error goes as h^4, h^5, ...
    for order in range(4, 3 + levels):
        f = 2.0 ** order
        estimates = [(f * fine - coarse) / (f - 1) for coarse, fine in zip(estimates, estimates[1:])]
    return estimates[0]


class TestRates(tests.LimitedTestCase):
    def test_defaults(self):
        r = kinetics.KineticRates()
        self.assert_allclose(r.depop, [1 / 35.0, 1 / 120.0, 1 / 250.0])
        self.assertAlmostEqual(sum(r.branching), 1.0, places=12)

    def test_hashable(self):
        a = kinetics.KineticRates(pump_rate=0.01)
        b = kinetics.KineticRates(pump_rate=0.01)
        assert hash(a) == hash(b)
        assert a == b
        assert a != a.with_pump(0.02)

    def test_branching_renormalised_within_tolerance(self):
        r = kinetics.KineticRates(branching=(0.76, 0.16, 0.08 + 1e-10))
        self.assertAlmostEqual(sum(r.branching), 1.0, places=15)

    def test_branching_must_sum_to_one(self):
        with tests.assert_raises(KineticsError):
            kinetics.KineticRates(branching=(0.5, 0.2, 0.2))

    def test_invalid(self):
        for kwargs in (dict(pump_rate=-1.0), dict(isc_yield=1.5), dict(depop=(0.1, -0.1, 0.1)),
                       dict(branching=(1.0, 0.0))):
            with tests.assert_raises(KineticsError):
                kinetics.KineticRates(**kwargs)

    def test_from_lifetimes(self):
        r = kinetics.KineticRates.from_lifetimes((10.0, 20.0, 40.0))
        self.assert_allclose(r.depop, [0.1, 0.05, 0.025])

    def test_mixing(self):
        m = kinetics.MicrowaveMixing('Tz-Tx', 2)
        assert m.pair == XZ
        assert m.rate == 2.0
        with tests.assert_raises(KineticsError):
            kinetics.MicrowaveMixing(XZ, -1.0)


class TestRateMatrix(tests.LimitedTestCase):
    def test_columns_sum_to_zero(self):
        r = kinetics.KineticRates()
        for mix in (None, kinetics.MicrowaveMixing(XZ, 3.0),
                    [kinetics.MicrowaveMixing(XY, 1.0), kinetics.MicrowaveMixing(YZ, 0.5)]):
            g = kinetics.rate_matrix(r, mix)
            self.assert_allclose(g.sum(axis=0), np.zeros(5), atol=1e-14)

    def test_off_diagonal_non_negative(self):
        g = kinetics.rate_matrix(kinetics.KineticRates(), kinetics.MicrowaveMixing(XZ, 1.0))
        off = g - np.diag(np.diag(g))
        assert np.all(off >= 0)

    def test_zero_field_projection_is_identity(self):
        r = kinetics.KineticRates()
        e = spin.eigensystem(spin.zfs_hamiltonian(spin.ZfsParameters(1396.0, -53.0)))
        p = kinetics.project_rates(e, r)
        self.assert_allclose(p.branching, r.branching, atol=1e-12)
        self.assert_allclose(p.depop, r.depop, atol=1e-12)

    def test_projection_mixes_rates(self):
        r = kinetics.KineticRates()
        site = spin.MolecularOrientation()
        e = spin.eigensystem(spin.site_hamiltonian(spin.ZfsParameters(1396.0, -53.0), site, (0.0, 0.0, 100.0)))
        p = kinetics.project_rates(e, r)
        # a field along z mixes Tx and Ty but leaves Tz alone
        self.assertAlmostEqual(p.depop[2], r.depop[2], places=12)
        assert r.depop[1] < p.depop[1] < r.depop[0]
        self.assertAlmostEqual(sum(p.branching), 1.0, places=12)


class TestEvolution(tests.LimitedTestCase):
    def test_expm_matches_rk(self):
        r = kinetics.KineticRates()
        g = kinetics.rate_matrix(r, kinetics.MicrowaveMixing(XZ, 0.2))
        n0 = kinetics.LevelPopulations.ground()
        a = kinetics.evolve(n0, 20.0, g)
        b = kinetics.evolve(n0, 20.0, g, method='rk')
        self.assert_allclose(a.as_array(), b.as_array(), atol=1e-8)
        assert a.is_valid()

    def test_expm_matches_fixed_step_oracle(self):
        r = kinetics.KineticRates()
        g = kinetics.rate_matrix(r, kinetics.MicrowaveMixing(XZ, 0.2))
        v = np.random.default_rng(11).random(5)
        n0 = v / v.sum()
        expected = rk4_richardson(g, n0, 1000.0)
        self.assert_allclose(kinetics.evolve(n0, 1000.0, g).as_array(), expected, rtol=0, atol=1e-7)

    def test_zero_time(self):
        n0 = kinetics.LevelPopulations(0.5, 0.1, 0.2, 0.1, 0.1)
        out = kinetics.evolve(n0, 0.0, kinetics.rate_matrix(kinetics.KineticRates()))
        assert out == n0

    def test_negative_time(self):
        g = kinetics.rate_matrix(kinetics.KineticRates())
        with tests.assert_raises(KineticsError):
            kinetics.evolve(kinetics.LevelPopulations.ground(), -1.0, g)
        with tests.assert_raises(KineticsError):
            kinetics.propagator(kinetics.KineticRates(), -1.0)

    def test_unknown_method(self):
        g = kinetics.rate_matrix(kinetics.KineticRates())
        with tests.assert_raises(ValueError):
            kinetics.evolve(kinetics.LevelPopulations.ground(), 1.0, g, method='euler')

    def test_propagator_cached_and_read_only(self):
        r = kinetics.KineticRates()
        a = kinetics.propagator(r, 10.0)
        assert kinetics.propagator(r, 10.0) is a
        with tests.assert_raises(ValueError):
            a[0, 0] = 1.0

    def test_integrated_propagator(self):
        # G * integral(exp(G s)) = exp(G t) - 1
        r = kinetics.KineticRates()
        t = 7.5
        g = kinetics.rate_matrix(r)
        lhs = g @ kinetics.integrated_propagator(r, t)
        self.assert_allclose(lhs, kinetics.propagator(r, t) - np.eye(5), atol=1e-10)

    def test_integrated_propagator_short_window(self):
        r = kinetics.KineticRates()
        self.assert_allclose(kinetics.integrated_propagator(r, 1e-9), 1e-9 * np.eye(5), rtol=1e-6, atol=1e-15)


class TestSteadyState(tests.LimitedTestCase):
    def test_dark_steady_state_is_ground(self):
        ss = kinetics.steady_state(kinetics.rate_matrix(kinetics.KineticRates(pump_rate=0.0)))
        self.assert_allclose(ss.as_array(), [1, 0, 0, 0, 0], atol=1e-12)

    def test_pumped_steady_state(self):
        r = kinetics.KineticRates()
        ss = kinetics.steady_state(kinetics.rate_matrix(r))
        assert ss.is_valid()
        self.assert_allclose(kinetics.rate_matrix(r) @ ss.as_array(), np.zeros(5), atol=1e-12)
        # unmixed triplet populations go as p_i / k_i
        ratio = ss.triplet / (np.array(r.branching) / np.array(r.depop))
        self.assert_allclose(ratio, ratio[0], rtol=1e-9)

    def test_long_evolution_reaches_steady_state(self):
        r = kinetics.KineticRates()
        g = kinetics.rate_matrix(r)
        late = kinetics.evolve(kinetics.LevelPopulations.ground(), 1e4, g)
        self.assert_allclose(late.as_array(), kinetics.steady_state(g).as_array(), atol=1e-7)

    def test_strong_mixing_equalises_pair(self):
        r = kinetics.KineticRates()
        for pair in (XZ, XY, YZ):
            ss = kinetics.steady_state(kinetics.rate_matrix(r, kinetics.MicrowaveMixing(pair, 1e6)))
            assert ss.is_valid()
            a, b = ss.as_array()[2 + int(pair.lower)], ss.as_array()[2 + int(pair.upper)]
            self.assertAlmostEqual(a / b, 1.0, delta=1e-5)

    def test_disconnected_generator(self):
        with tests.assert_raises(KineticsError):
            kinetics.steady_state(np.zeros((5, 5)))

    def test_pl_rate(self):
        r = kinetics.KineticRates()
        n = kinetics.LevelPopulations(0.0, 1.0, 0.0, 0.0, 0.0)
        self.assertAlmostEqual(kinetics.pl_rate(n, r), 100.0 * (1 - 0.63), places=12)


class TestCwContrast(tests.LimitedTestCase):
    def test_signs_and_magnitudes(self):
        xz = kinetics.cw_odmr_contrast(XZ, 1.0)
        xy = kinetics.cw_odmr_contrast(XY, 1.0)
        yz = kinetics.cw_odmr_contrast(YZ, 1.0)
        assert -0.0022 < xz < -0.0016, xz
        assert -0.0019 < xy < -0.0013, xy
        assert 0.00005 < yz < 0.0002, yz
        assert abs(xz) > abs(xy) > abs(yz)

    def test_no_mixing_no_contrast(self):
        assert kinetics.cw_odmr_contrast(XZ, 0.0) == 0.0

    def test_saturation_is_monotonic(self):
        values = [kinetics.cw_odmr_contrast(XZ, w) for w in (0.001, 0.01, 0.1, 1.0)]
        assert all(a > b for a, b in zip(values, values[1:])), values


@settings(max_examples=40, deadline=None)
@given(st.floats(min_value=0.0, max_value=2.0), st.floats(min_value=0.0, max_value=5.0),
       st.floats(min_value=0.0, max_value=500.0))
def test_evolution_conserves_population(pump, mixing, t):
    r = kinetics.KineticRates(pump_rate=pump)
    g = kinetics.rate_matrix(r, kinetics.MicrowaveMixing(XZ, mixing))
    out = kinetics.evolve(kinetics.LevelPopulations.ground(), t, g)
    assert out.is_valid(tol=1e-8), out
