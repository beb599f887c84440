"""Preset experiments: build a sequence, run every sweep point, fit the trace.

Each pulsed preset is written as ``.pseq`` text from the configuration and
parsed, so the same code path executes presets and user sequences. A shot
starts in the singlet ground state; the contrast of a point is the
differential signal against its reference (see :func:`SequenceRunner.measure`).
"""
import dataclasses
import logging
import math

import numpy as np

from tripletsim import engine
from tripletsim import fitting
from tripletsim import kinetics
from tripletsim import seqlang
from tripletsim import spin
from tripletsim import sweeppool
from tripletsim.config import ExperimentConfig
from tripletsim.seqlang import Laser, Mw, Read, Wait, format_value as _v
from tripletsim.support import PresetError

__all__ = ['ExperimentConfig', 'Trace', 'SequenceRunner', 'PRESETS', 'preset_sequence', 'run_preset',
           'run_sequence', 'fit_preset', 'field_map', 'cw_spectrum', 'site_resonances',
           'multilevel_ratio', 'lorentzian', 'fit_damped_cosine', 'fit_exponential']

log = logging.getLogger('tripletsim.experiments')

fit_damped_cosine = fitting.fit_damped_cosine
fit_exponential = fitting.fit_exponential

XY = spin.Transition('Tx', 'Ty')
YZ = spin.Transition('Ty', 'Tz')


@dataclasses.dataclass
class Trace:
    """Contrast per sweep point.

    2D traces keep one row per point: *x* and *y2* hold the two swept
    coordinates, ``metadata['shape']`` the (outer, inner) grid shape.
    """
    x: np.ndarray
    y: np.ndarray
    x_label: str = 'x'
    x_unit: str = ''
    y_label: str = 'contrast'
    y2: np.ndarray = None
    y2_label: str = None
    y2_unit: str = ''
    metadata: dict = dataclasses.field(default_factory=dict)

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.y = np.asarray(self.y, dtype=float)
        if self.x.shape != self.y.shape:
            raise ValueError('x and y lengths differ: {} != {}'.format(self.x.size, self.y.size))
        if self.y2 is not None:
            self.y2 = np.asarray(self.y2, dtype=float)
            if self.y2.shape != self.x.shape:
                raise ValueError('y2 length differs from x: {} != {}'.format(self.y2.size, self.x.size))
        if not (np.all(np.isfinite(self.x)) and np.all(np.isfinite(self.y))):
            raise ValueError('trace values must be finite')

    @property
    def is_2d(self):
        return self.y2 is not None

    def columns(self):
        """Header and column arrays in output order."""
        def name(label, unit):
            return '{}_{}'.format(label, unit) if unit else label
        head = [name(self.x_label, self.x_unit)]
        cols = [self.x]
        if self.is_2d:
            head.append(name(self.y2_label, self.y2_unit))
            cols.append(self.y2)
        head.append(self.y_label)
        cols.append(self.y)
        return head, cols

    def grid(self):
        """(x, y2, y) reshaped to the sweep grid, outer sweep first."""
        shape = tuple(self.metadata['shape'])
        return self.x.reshape(shape), self.y2.reshape(shape), self.y.reshape(shape)

    def __len__(self):
        return self.x.size


def lorentzian(delta, fwhm):
    """Unit-height Lorentzian of full width *fwhm*."""
    half = 0.5 * fwhm
    return half * half / (np.asarray(delta, dtype=float) ** 2 + half * half)


class SequenceRunner:
    """Executes concrete sequences against one configuration.

    Rates and sublevel labels are taken at the configured field for the
    pulsed site; tones without an explicit pair bind to the nearest
    transition.
    """

    def __init__(self, cfg):
        self.cfg = cfg
        e = cfg.eigensystem()
        if e.degenerate:
            log.warning('sublevel labels ambiguous at B = %s mT', cfg.field)
        self.frequencies = spin.transition_frequencies(e)
        self.rates = kinetics.project_rates(e, cfg.rates)
        self.decoherence = cfg.decoherence

    def pair_of(self, tone):
        if tone.pair is not None:
            return tone.pair
        ranked = sorted(self.frequencies.items(), key=lambda kv: abs(kv[1] - tone.frequency))
        pair, f = ranked[0]
        others = sorted(self.frequencies.values())
        spacing = min(b - a for a, b in zip(others, others[1:]))
        # half the closest spacing, never below the linewidth so tones still bind near crossings
        bound = max(0.5 * spacing, self.cfg.cw_linewidth)
        if abs(f - tone.frequency) > bound:
            raise PresetError('tone {!r} at {} MHz matches no transition (nearest {} at {:.6g} MHz)'.format(
                tone.name, _v(tone.frequency), pair, f))
        if abs(ranked[1][1] - tone.frequency) <= bound:
            log.warning('tone %r at %s MHz is within %.3g MHz of both %s and %s; using %s',
                        tone.name, _v(tone.frequency), bound, pair, ranked[1][0], pair)
        return pair

    def _inverted_index(self, ast):
        for i in range(len(ast.statements) - 1, -1, -1):
            st = ast.statements[i]
            if isinstance(st, Mw) and (ast.reference_tone is None or st.tone == ast.reference_tone):
                return i
        return None

    def shot(self, ast, delta=0.0, variant='seq'):
        """Integrated read-out PL of one shot of the concrete sequence *ast*.

        *variant* is ``'seq'``, ``'dark'`` (every pulse at zero amplitude) or
        ``'inverted'`` (final pulse phase advanced by 180 degrees).
        """
        invert_at = self._inverted_index(ast) if variant == 'inverted' else None
        state = engine.HybridState.ground()
        frame = {}
        addressed = None
        pl = 0.0
        for i, st in enumerate(ast.statements):
            if isinstance(st, Laser):
                state = engine.optical_pump(state, self.rates, st.duration)
            elif isinstance(st, Mw):
                tone = ast.tone(st.tone)
                pair = self.pair_of(tone)
                detuning = tone.frequency + st.detuning - self.frequencies[pair]
                phase = math.radians(st.phase) + (math.pi if i == invert_at else 0.0)
                rabi = 0.0 if variant == 'dark' else tone.rabi
                pulse = engine.MicrowavePulse(pair, rabi, st.duration, phase, detuning)
                state = engine.apply_pulse(state, pulse, self.frequencies)
                frame[pair] = detuning
                addressed = pair
            elif isinstance(st, Wait):
                offset = frame.get(addressed, 0.0) + delta
                state = engine.free_evolution(state, st.duration, self.decoherence, self.rates, offset, addressed)
            elif isinstance(st, Read):
                delay = self.cfg.delay if st.delay is None else st.delay
                pl = engine.readout(state, self.rates, delay, st.duration)
        return pl

    def measure(self, ast):
        """Differential contrast of one concrete sequence.

        Dark reference: (seq - dark) / dark. Inverted reference:
        (seq - inverted) / dark. Static detunings only act during ``wait``,
        so sequences without one skip the ensemble average.
        """
        dark = self.shot(ast, 0.0, 'dark')
        variants = ['seq'] + (['inverted'] if ast.reference == 'inverted' else [])

        def experiment(delta):
            return [self.shot(ast, delta, v) for v in variants]

        if any(isinstance(st, Wait) for st in ast.statements):
            pls = np.asarray(engine.ensemble_average(experiment, self.decoherence, self.cfg.quadrature_order))
        else:
            pls = np.asarray(experiment(0.0))
        ref = pls[1] if ast.reference == 'inverted' else dark
        return engine.differential_signal(pls[0], ref, dark)


def _pi_ns(rabi):
    return 1e3 / (2.0 * rabi)


def _half_pi_ns(rabi):
    return 1e3 / (4.0 * rabi)


class _Builder:
    def __init__(self, cfg):
        self.cfg = cfg
        self.freqs = cfg.transition_frequencies()
        self.lines = []

    def line(self, fmt, *args):
        self.lines.append(fmt.format(*(_v(a) if isinstance(a, float) else a for a in args)))
        return self

    def tone(self, name, pair, rabi):
        return self.line('tone {} freq {} rabi {} pair {}', name, float(self.freqs[pair]), float(rabi), pair)

    def laser(self):
        return self.line('laser {}', float(self.cfg.laser))

    def read(self):
        return self.line('read {} delay {}', float(self.cfg.read), float(self.cfg.delay))

    def text(self):
        return '\n'.join(self.lines) + '\n'


def _rabi_text(cfg, pair):
    s = cfg.sweeps
    b = _Builder(cfg).tone('MW', pair, cfg.rabi).laser().line('mw MW $t').read()
    return b.line('sweep t 0 {} {}', float(s['rabi_stop_ns']), s['rabi_steps']).text()


def _chevron_text(cfg):
    s = cfg.sweeps
    span = float(s['chevron_detuning_span'])
    b = _Builder(cfg).tone('MW', cfg.pair, cfg.rabi).laser().line('mw MW $t detuning $d').read()
    b.line('sweep d {} {} {}', -span, span, s['chevron_detuning_steps'])
    return b.line('sweep t 0 {} {}', float(s['rabi_stop_ns']), s['rabi_steps']).text()


def _ramsey_body(b, cfg, detuning):
    half = _half_pi_ns(cfg.rabi)
    b.laser()
    b.line('mw MW {} detuning {}', half, detuning)
    b.line('wait $tau')
    b.line('mw MW {} detuning {}', half, detuning)
    return b.read()


def _ramsey_text(cfg):
    s = cfg.sweeps
    b = _Builder(cfg).line('reference inverted').tone('MW', cfg.pair, cfg.rabi)
    _ramsey_body(b, cfg, float(s['ramsey_detuning']))
    return b.line('sweep tau 0 {} {}', float(s['ramsey_stop_us']), s['ramsey_steps']).text()


def _ramsey_detuning_text(cfg):
    s = cfg.sweeps
    span = float(s['ramsey_detuning_span'])
    b = _Builder(cfg).line('reference inverted').tone('MW', cfg.pair, cfg.rabi)
    _ramsey_body(b, cfg, '$d')
    b.line('sweep d {} {} {}', -span, span, s['ramsey_detuning_steps'])
    return b.line('sweep tau 0 {} {}', float(s['ramsey_stop_us']), s['ramsey_steps']).text()


def _hahn_text(cfg):
    s = cfg.sweeps
    b = _Builder(cfg).line('reference inverted').tone('MW', cfg.pair, cfg.rabi).laser()
    b.line('mw MW {}', _half_pi_ns(cfg.rabi)).line('wait $tau')
    b.line('mw MW {}', _pi_ns(cfg.rabi)).line('wait $tau')
    b.line('mw MW {}', _half_pi_ns(cfg.rabi)).read()
    return b.line('sweep tau 0 {} {}', float(s['hahn_stop_us']), s['hahn_steps']).text()


def _pulsed_odmr_text(cfg):
    s = cfg.sweeps
    span = float(s['odmr_span'])
    rabi = cfg.pulsed_odmr_rabi
    b = _Builder(cfg).tone('MW', cfg.pair, rabi).laser().line('mw MW {} detuning $d', _pi_ns(rabi)).read()
    return b.line('sweep d {} {} {}', -span, span, s['odmr_steps']).text()


def _multilevel_rabi_text(cfg):
    s = cfg.sweeps
    pi = _pi_ns(cfg.rabi)
    b = _Builder(cfg).tone('XY', XY, cfg.rabi).tone('YZ', YZ, cfg.rabi).laser()
    b.line('mw XY {}', pi).line('mw YZ $t').line('mw XY {}', pi).read()
    return b.line('sweep t 0 {} {}', float(s['rabi_stop_ns']), s['rabi_steps']).text()


def _multilevel_hahn_text(cfg):
    s = cfg.sweeps
    pi = _pi_ns(cfg.rabi)
    half = _half_pi_ns(cfg.rabi)
    b = _Builder(cfg).line('reference inverted YZ').tone('XY', XY, cfg.rabi).tone('YZ', YZ, cfg.rabi).laser()
    b.line('mw XY {}', pi).line('mw YZ {}', half).line('wait $tau').line('mw YZ {}', pi)
    b.line('wait $tau').line('mw YZ {}', half).line('mw XY {}', pi).read()
    return b.line('sweep tau 0 {} {}', float(s['hahn_stop_us']), s['hahn_steps']).text()


_SEQUENCE_PRESETS = {
    'rabi': lambda cfg: _rabi_text(cfg, cfg.pair),
    'singletone-rabi': lambda cfg: _rabi_text(cfg, YZ),
    'chevron': _chevron_text,
    'ramsey': _ramsey_text,
    'ramsey-detuning': _ramsey_detuning_text,
    'hahn': _hahn_text,
    'pulsed-odmr': _pulsed_odmr_text,
    'multilevel-rabi': _multilevel_rabi_text,
    'multilevel-hahn': _multilevel_hahn_text,
}

PRESETS = tuple(sorted(list(_SEQUENCE_PRESETS) + ['power', 'cw-spectrum', 'field-map']))


def preset_sequence(cfg, preset=None):
    """Canonical ``.pseq`` text of a sequence-based preset."""
    name = preset or cfg.preset
    try:
        builder = _SEQUENCE_PRESETS[name]
    except KeyError:
        raise PresetError('preset {!r} has no pulse sequence; sequence presets: {}'.format(
            name, ', '.join(sorted(_SEQUENCE_PRESETS))))
    return seqlang.print_sequence(seqlang.parse(builder(cfg)))


def run_sequence(ast, cfg, jobs=None, runner=None):
    """Run every sweep point of *ast* and return its :class:`Trace`."""
    runner = runner or SequenceRunner(cfg)
    points = seqlang.expand_sweeps(ast)
    values = sweeppool.SweepPool(jobs).map(runner.measure, points)
    names = [sw.name for sw in ast.sweeps]
    coords = np.array(seqlang.sweep_points(ast), dtype=float).reshape(len(points), len(names))
    meta = {'reference': ast.reference, 'sweeps': names, 'shape': [sw.steps for sw in ast.sweeps]}
    if not names:
        return Trace(np.zeros(1), values, x_label='point', metadata=meta)
    if len(names) == 1:
        return Trace(coords[:, 0], values, x_label=names[0], metadata=meta)
    # inner sweep on x so each row of the grid is one trace
    return Trace(coords[:, 1], values, x_label=names[1], y2=coords[:, 0], y2_label=names[0], metadata=meta)


def _label(trace, x_label, x_unit, y2_label=None, y2_unit='', x_scale=1.0):
    trace.x = trace.x * x_scale
    trace.x_label, trace.x_unit = x_label, x_unit
    if trace.is_2d:
        trace.y2_label, trace.y2_unit = y2_label, y2_unit
    return trace


_AXES = {
    'rabi': ('duration', 'ns', None, '', 1.0),
    'singletone-rabi': ('duration', 'ns', None, '', 1.0),
    'multilevel-rabi': ('duration', 'ns', None, '', 1.0),
    'chevron': ('duration', 'ns', 'detuning', 'MHz', 1.0),
    'ramsey': ('free_evolution', 'us', None, '', 1.0),
    'ramsey-detuning': ('free_evolution', 'us', 'detuning', 'MHz', 1.0),
    'hahn': ('total_free_evolution', 'us', None, '', 2.0),
    'multilevel-hahn': ('total_free_evolution', 'us', None, '', 2.0),
    'pulsed-odmr': ('frequency', 'MHz', None, '', 1.0),
}


def _run_power(cfg, jobs):
    s = cfg.sweeps
    stop = float(s['power_stop'])
    powers = np.linspace(stop / s['power_steps'], stop, s['power_steps'])
    runner = SequenceRunner(cfg)
    rabi, errors = [], []
    for p in powers:
        omega = cfg.drive.rabi(float(p))
        sub = cfg.override('drive', 'rabi', repr(omega))
        trace = run_sequence(seqlang.parse(_rabi_text(sub, cfg.pair)), sub, jobs, runner)
        fit = fitting.fit_damped_cosine(trace)
        rabi.append(fit.params['frequency'] * 1e3 if fit.converged else float('nan'))
        errors.append(fit.errors['frequency'] * 1e3 if fit.converged else float('nan'))
        log.debug('power %g: rabi %g MHz', p, rabi[-1])
    if not all(np.isfinite(rabi)):
        raise PresetError('Rabi fit failed for at least one power point')
    return Trace(powers, rabi, x_label='power', y_label='rabi_frequency_MHz',
                 metadata={'rabi_errors_MHz': errors})


def site_resonances(cfg, b_lab):
    """Transition frequencies of every site at the lab-frame field *b_lab*."""
    return [spin.transition_frequencies(spin.eigensystem(spin.site_hamiltonian(cfg.zfs, site, b_lab)))
            for site in cfg.sites]


def _cw_column(cfg, b_lab, freqs):
    # each line is the saturated contrast of its transition under a Lorentzian weight;
    # sites add in proportion to their dark PL
    freqs = np.asarray(freqs, dtype=float)
    delta_pl = np.zeros(freqs.size)
    off = 0.0
    for site in cfg.sites:
        e = spin.eigensystem(spin.site_hamiltonian(cfg.zfs, site, b_lab))
        rates = kinetics.project_rates(e, cfg.cw_rates)
        pl_off = kinetics.pl_rate(kinetics.steady_state(kinetics.rate_matrix(rates)), rates)
        off += pl_off
        for pair, ft in spin.transition_frequencies(e).items():
            c = kinetics.cw_contrast(rates, kinetics.MicrowaveMixing(pair, cfg.cw_mixing_rate))
            delta_pl += pl_off * c * lorentzian(freqs - ft, cfg.cw_linewidth)
    return delta_pl / off


def _cw_freqs(cfg):
    start, stop, steps = cfg.cw_freqs
    return np.linspace(start, stop, steps)


def cw_spectrum(cfg):
    """cw-ODMR contrast against microwave frequency at the configured field."""
    freqs = _cw_freqs(cfg)
    y = _cw_column(cfg, np.array(cfg.field), freqs)
    return Trace(freqs, y, x_label='frequency', x_unit='MHz',
                 metadata={'field_mT': list(cfg.field)})


def field_map(cfg, jobs=None):
    """cw-ODMR contrast over (field magnitude, frequency), field along the configured direction."""
    start, stop, steps = cfg.field_scan
    fields = np.linspace(start, stop, steps)
    freqs = _cw_freqs(cfg)
    direction = np.array(cfg.field_direction)
    columns = sweeppool.SweepPool(jobs).map(lambda b: _cw_column(cfg, b * direction, freqs), fields)
    x = np.repeat(fields, freqs.size)
    y2 = np.tile(freqs, fields.size)
    return Trace(x, np.concatenate(columns), x_label='field', x_unit='mT', y2=y2, y2_label='frequency',
                 y2_unit='MHz', metadata={'shape': [int(fields.size), int(freqs.size)]})


def run_preset(cfg, jobs=None):
    """Run ``cfg.preset`` and return its trace (2D for chevron, ramsey-detuning, field-map)."""
    name = cfg.preset
    if name not in PRESETS:
        raise PresetError('unknown preset {!r}, expected one of: {}'.format(name, ', '.join(PRESETS)))
    log.info('running preset %s', name)
    if name == 'power':
        trace = _run_power(cfg, jobs)
    elif name == 'cw-spectrum':
        trace = cw_spectrum(cfg)
    elif name == 'field-map':
        trace = field_map(cfg, jobs)
    else:
        ast = seqlang.parse(preset_sequence(cfg, name))
        trace = _label(run_sequence(ast, cfg, jobs), *_AXES[name])
        if name == 'pulsed-odmr':
            trace.x = trace.x + cfg.transition_frequencies()[cfg.pair]
        trace.metadata['sequence'] = seqlang.print_sequence(ast)
    trace.metadata.update({'preset': name, 'seed': cfg.seed})
    if cfg.noise > 0 and name != 'power':
        trace = fitting.add_noise(trace, cfg.noise, np.random.default_rng(cfg.seed))
    return trace


def fit_preset(trace, cfg):
    """Fits that belong to the preset of *trace*, keyed by name."""
    name = trace.metadata.get('preset')
    seed = cfg.seed
    fits = {}
    if name in ('rabi', 'singletone-rabi', 'multilevel-rabi'):
        fit = fitting.fit_damped_cosine(trace, seed=seed)
        if fit.converged:
            fit.params['rabi_frequency_MHz'] = fit.params['frequency'] * 1e3
            fit.errors['rabi_frequency_MHz'] = fit.errors['frequency'] * 1e3
        fits['rabi'] = fit
    elif name == 'ramsey':
        t2 = cfg.decoherence.t2_for(cfg.pair)
        fit = fitting.fit_damped_cosine(trace, envelope='gaussian', fixed_decay=None if math.isinf(t2) else t2,
                                        seed=seed)
        if fit.converged:
            fit.params['t2star_us'] = fit.params['tau']
            fit.errors['t2star_us'] = fit.errors['tau']
        fits['ramsey'] = fit
    elif name in ('hahn', 'multilevel-hahn'):
        fits['echo'] = fitting.fit_exponential(trace, seed=seed)
    elif name == 'power':
        fits['kappa'] = fitting.fit_sqrt_power(trace.x, trace.y)
    elif name in ('pulsed-odmr', 'cw-spectrum'):
        i = int(np.argmax(np.abs(trace.y)))
        fits['peak'] = fitting.FitResult('peak', {'frequency_MHz': float(trace.x[i]),
                                                  'contrast': float(trace.y[i])}, {}, 0.0, True)
    for fit in fits.values():
        if not fit.converged:
            log.warning('%s fit did not converge: %s', fit.model, fit.message)
    return fits


def multilevel_ratio(cfg, jobs=None):
    """Peak |contrast| of the multi-level Rabi trace over the single-tone Ty-Tz trace."""
    multi = run_preset(cfg.with_preset('multilevel-rabi'), jobs)
    single = run_preset(cfg.with_preset('singletone-rabi'), jobs)
    peak = float(np.max(np.abs(single.y)))
    if peak == 0:
        raise PresetError('single-tone trace has no contrast')
    return float(np.max(np.abs(multi.y))) / peak
