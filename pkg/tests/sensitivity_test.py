import math

from hypothesis import given, settings, strategies as st

from tripletsim import config
from tripletsim import sensitivity
from tripletsim.support import SensitivityError
import tests


class TestEtaV(tests.LimitedTestCase):
    def test_film_dc(self):
        r = sensitivity.eta_v(sensitivity.profile('film', 'dc'))
        self.assertAlmostEqual(r.eta_v_nt, 846.4, delta=0.5)

    def test_crystal_dc(self):
        r = sensitivity.eta_v(sensitivity.profile('crystal', 'dc'))
        self.assertAlmostEqual(r.eta_v_nt, 411.8, delta=0.5)

    def test_projected(self):
        dc = sensitivity.eta_v(sensitivity.profile('projected', 'dc'))
        ac = sensitivity.eta_v(sensitivity.profile('projected', 'ac'))
        self.assertAlmostEqual(dc.eta_v_nt, 2.86, delta=0.01)
        self.assertAlmostEqual(ac.eta_v_nt, 1.12, delta=0.01)
        # ac pays pi/2 but gains T2/T2* = 4
        self.assertAlmostEqual(ac.eta_v / dc.eta_v, math.pi / 8, places=12)

    def test_spin_density(self):
        self.assertAlmostEqual(sensitivity.spin_density(1e-3), 2e-3 / 617.0 * 1e12, places=6)
        assert sensitivity.spin_density(0.0) == 0.0
        with tests.assert_raises(SensitivityError):
            sensitivity.spin_density(-1.0)
        with tests.assert_raises(SensitivityError):
            sensitivity.spin_density(1e-3, v_cell=0.0)

    def test_scaling(self):
        p = sensitivity.profile('film')
        base = sensitivity.eta_v(p).eta_v
        self.assertAlmostEqual(sensitivity.eta_v(p.replace(contrast=0.1)).eta_v / base, 0.5, places=12)
        self.assertAlmostEqual(sensitivity.eta_v(p.replace(doping=4e-3)).eta_v / base, 0.5, places=12)
        self.assertAlmostEqual(sensitivity.eta_v(p.replace(t_overhead=1400e-6)).eta_v / base, 2.0, places=12)
        self.assertAlmostEqual(sensitivity.eta_v(p.replace(coherence=240e-9)).eta_v / base, 0.5, places=12)

    def test_invalid_params(self):
        bad = [dict(contrast=-0.1), dict(contrast=1.5), dict(doping=0.0), dict(doping=2.0), dict(n_avg=float('nan')),
               dict(coherence=0.0), dict(mode='rf')]
        p = sensitivity.profile('film')
        for change in bad:
            with tests.assert_raises(SensitivityError):
                p.replace(**change)

    def test_profiles(self):
        assert sensitivity.PROFILES == ('film', 'crystal', 'projected')
        with tests.assert_raises(SensitivityError):
            sensitivity.profile('diamond')
        with tests.assert_raises(SensitivityError):
            sensitivity.profile('film', 'rf')
        assert sensitivity.profile('crystal', 'AC').coherence == 1.17e-6

    def test_published_names(self):
        for name in sensitivity.PROFILES:
            assert sensitivity.profile('paper-' + name, 'ac') == sensitivity.profile(name, 'ac')

    def test_reference(self):
        assert sensitivity.reference_sensitivity('dc') == 34.0
        assert sensitivity.reference_sensitivity('AC') == 13.0
        with tests.assert_raises(SensitivityError):
            sensitivity.reference_sensitivity('rf')


class TestSweep(tests.LimitedTestCase):
    def test_sweep_alias(self):
        p = sensitivity.profile('film')
        rows = sensitivity.sweep_eta(p, 'C', [0.05, 0.1])
        assert [v for v, _ in rows] == [0.05, 0.1]
        self.assertAlmostEqual(rows[0][1].eta_v, 2 * rows[1][1].eta_v, places=20)

    def test_sweep_unknown_axis(self):
        with tests.assert_raises(SensitivityError):
            sensitivity.sweep_eta(sensitivity.profile('film'), 'field', [1.0])

    def test_sweep_invalid_value(self):
        with tests.assert_raises(SensitivityError):
            sensitivity.sweep_eta(sensitivity.profile('film'), 'contrast', [0.1, 0.0])


class TestFromConfig(tests.LimitedTestCase):
    def test_film_profile_matches(self):
        cfg = config.load_profile('film')
        p = sensitivity.from_config(cfg.sensing)
        self.assertAlmostEqual(sensitivity.eta_v(p).eta_v_nt,
                               sensitivity.eta_v(sensitivity.profile('film')).eta_v_nt, places=9)

    def test_mode_override(self):
        cfg = config.load_profile('crystal')
        p = sensitivity.from_config(cfg.sensing, 'ac')
        assert p.mode == 'ac'
        self.assertAlmostEqual(p.coherence, 1.17e-6, places=15)


@settings(max_examples=100, deadline=None)
@given(st.floats(1e-3, 1.0), st.floats(1e-6, 1.0), st.floats(1e-6, 1.0), st.floats(1e-6, 1e-2),
       st.floats(1e-9, 1e-3), st.sampled_from(['dc', 'ac']))
def test_eta_positive_and_monotonic_in_contrast(contrast, doping, n_avg, t_overhead, coherence, mode):
    p = sensitivity.SensingParams(mode, contrast, doping, n_avg, t_overhead, coherence)
    r = sensitivity.eta_v(p)
    assert r.eta_v > 0 and math.isfinite(r.eta_v)
    if contrast < 1.0:
        assert sensitivity.eta_v(p.replace(contrast=min(1.0, contrast * 2))).eta_v < r.eta_v
