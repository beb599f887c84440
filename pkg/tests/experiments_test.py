import math

import numpy as np

from tripletsim import experiments
from tripletsim import fitting
from tripletsim import kinetics
from tripletsim import seqlang
from tripletsim import spin
from tripletsim.experiments import Trace
from tripletsim.support import PresetError
import tests


def run(preset, cfg):
    cfg = cfg.with_preset(preset)
    trace = experiments.run_preset(cfg, jobs=1)
    return trace, experiments.fit_preset(trace, cfg)


class TestTrace(tests.LimitedTestCase):
    def test_columns(self):
        t = Trace([0, 1], [0.1, 0.2], x_label='duration', x_unit='ns')
        head, cols = t.columns()
        assert head == ['duration_ns', 'contrast']
        assert len(cols) == 2 and len(t) == 2
        assert not t.is_2d

    def test_2d_columns(self):
        t = Trace([0, 1], [0.1, 0.2], x_label='duration', x_unit='ns', y2=[3, 3], y2_label='detuning',
                  y2_unit='MHz', metadata={'shape': [1, 2]})
        assert t.columns()[0] == ['duration_ns', 'detuning_MHz', 'contrast']
        x, y2, y = t.grid()
        assert x.shape == (1, 2)

    def test_validation(self):
        with tests.assert_raises(ValueError):
            Trace([0, 1, 2], [0.0, 1.0])
        with tests.assert_raises(ValueError):
            Trace([0, 1], [0.0, 1.0], y2=[1.0])
        with tests.assert_raises(ValueError):
            Trace([0, 1], [0.0, np.inf])

    def test_lorentzian(self):
        assert experiments.lorentzian(0.0, 20.0) == 1.0
        self.assertAlmostEqual(float(experiments.lorentzian(10.0, 20.0)), 0.5, places=15)


class TestSequenceRunner(tests.LimitedTestCase):
    def test_pair_by_frequency(self):
        runner = experiments.SequenceRunner(tests.quick_config())
        ast = seqlang.parse('tone A freq 1440 rabi 1\ntone B freq 700 rabi 1\nlaser 1\nread 1\n')
        assert str(runner.pair_of(ast.tone('A'))) == 'Tx-Tz'
        with tests.assert_raises(PresetError):
            runner.pair_of(ast.tone('B'))

    def test_pair_by_frequency_near_crossing(self):
        runner = experiments.SequenceRunner(tests.quick_config())
        # two lines half a MHz apart
        runner.frequencies = {spin.Transition('Tx', 'Ty'): 700.0, spin.Transition('Ty', 'Tz'): 700.5,
                              spin.Transition('Tx', 'Tz'): 1400.5}
        ast = seqlang.parse('tone A freq 690 rabi 1\ntone B freq 1405 rabi 1\ntone C freq 760 rabi 1\nlaser 1\nread 1\n')
        assert str(runner.pair_of(ast.tone('A'))) == 'Tx-Ty'
        assert str(runner.pair_of(ast.tone('B'))) == 'Tx-Tz'
        with tests.assert_raises(PresetError):
            runner.pair_of(ast.tone('C'))

    def test_no_pulse_no_contrast(self):
        runner = experiments.SequenceRunner(tests.quick_config())
        self.assertAlmostEqual(runner.measure(seqlang.parse('laser 10\nwait 0.2\nread 10\n')), 0.0, places=12)

    def test_user_sequence(self):
        cfg = tests.quick_config()
        ast = seqlang.parse(tests.read_file(tests.sequence_path('rabi.pseq')))
        trace = experiments.run_sequence(ast, cfg, jobs=1)
        assert len(trace) == 16
        assert trace.x[-1] == 300.0
        assert trace.y[0] == 0.0
        assert trace.metadata['shape'] == [16]
        assert np.min(trace.y) < 0

    def test_user_grid_sequence(self):
        cfg = tests.quick_config()
        ast = seqlang.parse(tests.read_file(tests.sequence_path('ramsey_grid.pseq')))
        trace = experiments.run_sequence(ast, cfg, jobs=1)
        assert trace.is_2d
        assert trace.metadata['reference'] == 'inverted'
        assert (trace.x_label, trace.y2_label) == ('tau', 'd')
        x, d, y = trace.grid()
        assert y.shape == (3, 5)
        self.assert_allclose(d[0], np.full(5, -4.0))
        self.assert_allclose(x[0], np.linspace(0.0, 0.4, 5))


class TestPulsedPresets(tests.LimitedTestCase):
    def test_rabi_frequency(self):
        cfg = tests.quick_config(experiment__rabi_stop_ns='400', experiment__rabi_steps='41')
        trace, fits = run('rabi', cfg)
        assert trace.x_unit == 'ns'
        assert 'mw MW $t' in trace.metadata['sequence']
        fit = fits['rabi']
        assert fit.converged, fit.message
        self.assertAlmostEqual(fit['rabi_frequency_MHz'], 5.0, delta=0.005)

    def test_chevron(self):
        cfg = tests.quick_config(experiment__rabi_stop_ns='200', experiment__rabi_steps='11',
                                 experiment__chevron_detuning_steps='5')
        trace, fits = run('chevron', cfg)
        assert fits == {}
        assert trace.metadata['shape'] == [5, 11]
        x, d, y = trace.grid()
        self.assert_allclose(d[:, 0], [-10.0, -5.0, 0.0, 5.0, 10.0])
        self.assert_allclose(y[:, 0], np.zeros(5), atol=1e-15)
        # full transfer only on resonance
        assert np.max(np.abs(y[2])) > 2 * np.max(np.abs(y[0]))

    def test_ramsey_t2star(self):
        cfg = tests.quick_config(experiment__ramsey_steps='61')
        trace, fits = run('ramsey', cfg)
        assert trace.metadata['reference'] == 'inverted'
        fit = fits['ramsey']
        assert fit.converged, fit.message
        self.assertAlmostEqual(fit['t2star_us'], 0.39, delta=0.03)
        self.assertAlmostEqual(fit['frequency'], 5.0, delta=0.2)

    def test_ramsey_detuning_grid(self):
        cfg = tests.quick_config(experiment__ramsey_steps='5', experiment__ramsey_detuning_steps='3')
        trace, _ = run('ramsey-detuning', cfg)
        assert trace.metadata['shape'] == [3, 5]
        assert (trace.y2_label, trace.y2_unit) == ('detuning', 'MHz')

    def test_hahn_echo(self):
        cfg = tests.quick_config(experiment__hahn_steps='26')
        trace, fits = run('hahn', cfg)
        assert trace.x_label == 'total_free_evolution'
        self.assertAlmostEqual(trace.x[-1], 5.0, places=12)
        fit = fits['echo']
        assert fit.converged, fit.message
        self.assertAlmostEqual(fit['T'], 1.17, delta=0.05)

    def test_pulsed_odmr(self):
        trace, fits = run('pulsed-odmr', tests.quick_config())
        assert len(trace) == 61
        peak = fits['peak']
        self.assertAlmostEqual(peak['frequency_MHz'], 1449.0, places=6)
        assert peak['contrast'] < 0
        assert peak['contrast'] == np.min(trace.y)

    def test_multilevel_ratio(self):
        ratio = experiments.multilevel_ratio(tests.quick_config(), jobs=1)
        # published gain is about 18 (7% against 0.4%)
        assert 9.0 <= ratio <= 36.0, ratio

    def test_multilevel_sequences(self):
        cfg = tests.quick_config()
        text = experiments.preset_sequence(cfg, 'multilevel-hahn')
        assert text.startswith('reference inverted YZ\n')
        assert text.count('mw XY 100\n') == 2


class TestOtherPresets(tests.LimitedTestCase):
    def test_power(self):
        cfg = tests.quick_config(experiment__rabi_stop_ns='800', experiment__rabi_steps='41',
                                 experiment__power_steps='4')
        trace, fits = run('power', cfg)
        self.assert_allclose(trace.x, [1.0, 2.0, 3.0, 4.0])
        self.assert_allclose(trace.y, 5.0 * np.sqrt(trace.x), rtol=0.02)
        assert fits['kappa'].converged
        self.assertAlmostEqual(fits['kappa']['kappa'], 5.0, delta=0.1)

    def test_cw_spectrum(self):
        trace, fits = run('cw-spectrum', tests.quick_config())
        assert len(trace) == 301
        i = int(np.argmin(trace.y))
        assert trace.x[i] == 1450.0
        assert fits['peak']['frequency_MHz'] == 1450.0
        assert trace.y[list(trace.x).index(105.0)] < 0

    def test_cw_dip_on_transition(self):
        cfg = tests.quick_config(cw__freq_start='1440', cw__freq_stop='1460', cw__freq_steps='41')
        trace = experiments.cw_spectrum(cfg)
        i = int(np.argmin(trace.y))
        assert trace.x[i] == 1449.0
        saturated = kinetics.cw_contrast(cfg.cw_rates, kinetics.MicrowaveMixing(cfg.pair, cfg.cw_mixing_rate))
        self.assertAlmostEqual(trace.y[i], saturated, delta=0.01 * abs(saturated))

    def test_cw_lorentzian_tail(self):
        # > 50 linewidths above the highest line
        cfg = tests.quick_config(cw__freq_start='2500', cw__freq_stop='2600', cw__freq_steps='3')
        assert np.max(np.abs(experiments.cw_spectrum(cfg).y)) < 1e-4

    def test_field_map(self):
        cfg = tests.quick_config(field__scan_steps='3', cw__freq_steps='31')
        trace, _ = run('field-map', cfg)
        assert trace.metadata['shape'] == [3, 31]
        b, f, y = trace.grid()
        self.assert_allclose(b[:, 0], [0.0, 50.0, 100.0])
        self.assert_allclose(y[0], experiments.cw_spectrum(cfg).y, atol=1e-15)

    def test_site_resonances_split_in_field(self):
        cfg = tests.quick_config()
        a, b = experiments.site_resonances(cfg, np.array([30.0, 0.0, 0.0]))
        assert max(abs(a[p] - b[p]) for p in a) > 1.0


class TestRecovery(tests.LimitedTestCase):
    """Fitted timescales against the values the simulation was configured with."""

    TEST_TIMEOUT = 120

    def test_chevron_law(self):
        cfg = tests.quick_config(experiment__chevron_detuning_steps='5')
        trace, _ = run('chevron', cfg)
        x, d, y = trace.grid()
        omega = cfg.rabi
        amplitude = {}
        for row in range(d.shape[0]):
            delta = float(d[row, 0])
            fit = fitting.fit_damped_cosine(Trace(x[row], y[row], x_label='duration', x_unit='ns'))
            assert fit.converged, (delta, fit.message)
            generalised = math.hypot(omega, delta)
            self.assertAlmostEqual(fit['frequency'] * 1e3, generalised, delta=0.01 * generalised)
            amplitude[delta] = fit['amplitude']
        for delta, a in amplitude.items():
            expected = omega ** 2 / (omega ** 2 + delta ** 2)
            self.assertAlmostEqual(a / amplitude[0.0], expected, delta=0.01 * expected)

    def test_ramsey_t2star(self):
        for profile, t2star in (('crystal', 0.39), ('film', 0.12)):
            trace, fits = run('ramsey', tests.quick_config(profile))
            fit = fits['ramsey']
            assert fit.converged, (profile, fit.message)
            self.assertAlmostEqual(fit['t2star_us'], t2star, delta=0.05 * t2star)
            self.assertAlmostEqual(fit['frequency'], 5.0, delta=0.05)

    def test_hahn_t2(self):
        for t2 in (0.75, 1.17, 1.56):
            cfg = tests.quick_config(**{'decoherence__t2_Tx-Tz': str(t2)})
            trace, fits = run('hahn', cfg)
            fit = fits['echo']
            assert fit.converged, (t2, fit.message)
            self.assertAlmostEqual(fit['T'], t2, delta=0.02 * t2)

    def test_echo_ignores_inhomogeneous_width(self):
        amplitudes = []
        for sigma in ('0', '2.5', '5'):
            cfg = tests.quick_config(decoherence__sigma_inh=sigma, experiment__hahn_steps='6')
            amplitudes.append(run('hahn', cfg)[0].y[2])
        self.assert_allclose(amplitudes, amplitudes[0], rtol=0.01)


class TestRunPreset(tests.LimitedTestCase):
    def test_unknown(self):
        with tests.assert_raises(PresetError):
            experiments.run_preset(tests.quick_config().with_preset('nutation'))

    def test_no_sequence(self):
        with tests.assert_raises(PresetError):
            experiments.preset_sequence(tests.quick_config(), 'power')

    def test_seeded_noise(self):
        cfg = tests.quick_config(experiment__rabi_steps='11', experiment__noise='0.01')
        a = experiments.run_preset(cfg.with_preset('rabi', 5), jobs=1)
        b = experiments.run_preset(cfg.with_preset('rabi', 5), jobs=1)
        c = experiments.run_preset(cfg.with_preset('rabi', 6), jobs=1)
        np.testing.assert_array_equal(a.y, b.y)
        assert not np.array_equal(a.y, c.y)
        assert a.metadata['seed'] == 5

    def test_jobs_do_not_change_results(self):
        cfg = tests.quick_config(experiment__ramsey_steps='9').with_preset('ramsey')
        serial = experiments.run_preset(cfg, jobs=1)
        parallel = experiments.run_preset(cfg, jobs=4)
        np.testing.assert_array_equal(serial.y, parallel.y)

    def test_presets_listed(self):
        assert 'field-map' in experiments.PRESETS
        assert list(experiments.PRESETS) == sorted(experiments.PRESETS)
