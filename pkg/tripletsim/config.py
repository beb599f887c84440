"""INI configuration: schema, profiles and the resolved :class:`ExperimentConfig`.

Every value is kept as text in :attr:`ExperimentConfig.raw` so a run can be
written to a JSON sidecar and reloaded through the same validation path.
"""
import collections
import configparser
import dataclasses
import importlib.resources
import json
import math
import os

import numpy as np

from tripletsim import engine
from tripletsim import kinetics
from tripletsim import spin
from tripletsim.support import ConfigError, TripletSimError

__all__ = ['ExperimentConfig', 'SCHEMA', 'PROFILES', 'load_config', 'load_profile', 'from_mapping',
           'default_jobs', 'default_seed', 'DEFAULT_SEED']

DEFAULT_SEED = 1729
PROFILES = ('crystal', 'film')

_seed_env = os.environ.get('TRIPLETSIM_SEED')
_jobs_env = os.environ.get('TRIPLETSIM_JOBS')


def default_seed():
    try:
        return int(_seed_env) if _seed_env else DEFAULT_SEED
    except ValueError:
        raise ConfigError('TRIPLETSIM_SEED must be an integer, got {!r}'.format(_seed_env))


def default_jobs():
    try:
        return max(1, int(_jobs_env)) if _jobs_env else 1
    except ValueError:
        raise ConfigError('TRIPLETSIM_JOBS must be an integer, got {!r}'.format(_jobs_env))


# section -> key -> (kind, default text); a default of None means "derived"
SCHEMA = collections.OrderedDict([
    ('zfs', collections.OrderedDict([
        ('D', ('float', '1396')),
        ('E', ('float', '-53')),
    ])),
    ('field', collections.OrderedDict([
        ('magnitude_mT', ('nonneg', '0')),
        ('direction', ('vector', '1 1 1')),
        ('scan_start_mT', ('nonneg', '0')),
        ('scan_stop_mT', ('nonneg', '100')),
        ('scan_steps', ('steps', '21')),
    ])),
    ('sites', collections.OrderedDict([
        ('herringbone_deg', ('float', '60')),
        ('site_a_euler_deg', ('vector', '0 0 0')),
        ('site_b_euler_deg', ('vector', None)),
    ])),
    ('kinetics', collections.OrderedDict([
        ('pump_rate', ('nonneg', '0.05')),
        ('s1_decay_rate', ('positive', '100')),
        ('isc_yield', ('fraction', '0.63')),
        ('branching', ('vector', '0.76 0.16 0.08')),
        ('lifetimes_us', ('vector', '35 120 250')),
    ])),
    ('cw', collections.OrderedDict([
        ('pump_rate', ('positive', '6.4e-4')),
        ('mixing_rate', ('nonneg', '1.0')),
        ('linewidth', ('positive', '20')),
        ('freq_start', ('positive', '50')),
        ('freq_stop', ('positive', '1550')),
        ('freq_steps', ('steps', '301')),
    ])),
    ('decoherence', collections.OrderedDict([
        ('t2_Tx-Tz', ('positive', '1.17')),
        ('t2_Ty-Tz', ('positive', '1.56')),
        ('t2_Tx-Ty', ('positive', '1.17')),
        ('t2star', ('positive', '0.39')),
        ('sigma_inh', ('nonneg', None)),
        ('quadrature_order', ('steps', '21')),
    ])),
    ('drive', collections.OrderedDict([
        ('kappa', ('positive', '5.0')),
        ('rabi', ('positive', '5.0')),
        ('pulsed_odmr_rabi', ('positive', '10.0')),
    ])),
    ('readout', collections.OrderedDict([
        ('laser', ('nonneg', '10')),
        ('delay', ('nonneg', '50')),
        ('read', ('positive', '10')),
    ])),
    ('experiment', collections.OrderedDict([
        ('pair', ('pair', 'Tx-Tz')),
        ('noise', ('nonneg', '0')),
        ('rabi_stop_ns', ('positive', '1000')),
        ('rabi_steps', ('steps', '101')),
        ('ramsey_detuning', ('float', '5')),
        ('ramsey_stop_us', ('positive', '1.2')),
        ('ramsey_steps', ('steps', '121')),
        ('ramsey_detuning_span', ('positive', '20')),
        ('ramsey_detuning_steps', ('steps', '21')),
        ('hahn_stop_us', ('positive', '2.5')),
        ('hahn_steps', ('steps', '51')),
        ('chevron_detuning_span', ('positive', '10')),
        ('chevron_detuning_steps', ('steps', '21')),
        ('power_stop', ('positive', '4')),
        ('power_steps', ('steps', '9')),
        ('odmr_span', ('positive', '30')),
        ('odmr_steps', ('steps', '61')),
    ])),
    ('sensing', collections.OrderedDict([
        ('mode', ('mode', 'dc')),
        ('contrast', ('fraction', '0.05')),
        ('doping', ('fraction', '1e-3')),
        ('n_avg', ('positive', '1e-3')),
        ('t_overhead_us', ('positive', '350')),
        ('t2star_us', ('positive', '0.12')),
        ('t2_us', ('positive', '0.75')),
        ('z_cell', ('positive', '2')),
        ('v_cell', ('positive', '617')),
    ])),
])


def _parse_value(kind, text, where):
    try:
        if kind == 'vector':
            values = tuple(float(v) for v in text.replace(',', ' ').split())
            if len(values) != 3:
                raise ValueError('expected three numbers')
            if not all(math.isfinite(v) for v in values):
                raise ValueError('non-finite component')
            return values
        if kind == 'pair':
            return spin.Transition.parse(text)
        if kind == 'mode':
            mode = text.strip().lower()
            if mode not in ('dc', 'ac'):
                raise ValueError('expected dc or ac')
            return mode
        if kind == 'steps':
            value = int(text)
            if value < 2:
                raise ValueError('must be an integer >= 2')
            return value
        value = float(text)
    except ValueError as e:
        raise ConfigError('{}: invalid value {!r}: {}'.format(where, text, e))
    if not math.isfinite(value):
        raise ConfigError('{}: value must be finite, got {!r}'.format(where, text))
    if kind == 'nonneg' and value < 0:
        raise ConfigError('{}: must be >= 0, got {!r}'.format(where, text))
    if kind == 'positive' and value <= 0:
        raise ConfigError('{}: must be > 0, got {!r}'.format(where, text))
    if kind == 'fraction' and not 0 < value <= 1:
        raise ConfigError('{}: must be in (0, 1], got {!r}'.format(where, text))
    return value


@dataclasses.dataclass(frozen=True)
class ExperimentConfig:
    """Resolved parameter set plus the preset and seed of one run."""
    zfs: spin.ZfsParameters
    rates: kinetics.KineticRates
    cw_rates: kinetics.KineticRates
    cw_mixing_rate: float
    cw_linewidth: float
    cw_freqs: tuple
    decoherence: engine.DecoherenceParams
    quadrature_order: int
    drive: engine.DriveCalibration
    rabi: float
    pulsed_odmr_rabi: float
    laser: float
    delay: float
    read: float
    sites: tuple
    field: tuple
    field_direction: tuple
    field_scan: tuple
    pair: spin.Transition
    noise: float
    sweeps: dict
    sensing: dict
    raw: dict
    preset: str = None
    seed: int = DEFAULT_SEED
    source: str = '<defaults>'

    @property
    def site(self):
        """Orientation used by the pulsed presets."""
        return self.sites[0]

    def with_preset(self, preset, seed=None):
        return dataclasses.replace(self, preset=preset, seed=self.seed if seed is None else seed)

    def override(self, section, key, value):
        """New config with one raw value replaced and everything re-validated."""
        raw = {s: dict(v) for s, v in self.raw.items()}
        raw.setdefault(section, {})[key] = str(value)
        out = from_mapping(raw, self.source)
        return dataclasses.replace(out, preset=self.preset, seed=self.seed)

    def hamiltonian(self, site=None):
        return spin.site_hamiltonian(self.zfs, site or self.site, self.field)

    def eigensystem(self, site=None):
        return spin.eigensystem(self.hamiltonian(site))

    def transition_frequencies(self, site=None):
        return spin.transition_frequencies(self.eigensystem(site))


def _resolve(mapping, source):
    raw = collections.OrderedDict()
    for section, keys in mapping.items():
        if section not in SCHEMA:
            raise ConfigError('{}: unknown section [{}]'.format(source, section))
        for key in keys:
            if key not in SCHEMA[section]:
                raise ConfigError('{}: unknown key {!r} in [{}]'.format(source, key, section))
    for section, keys in SCHEMA.items():
        given = mapping.get(section, {})
        raw[section] = collections.OrderedDict()
        for key, (_, default) in keys.items():
            text = given.get(key, default)
            if text is not None:
                raw[section][key] = str(text).strip()
    return raw


def from_mapping(mapping, source='<mapping>'):
    """Validate a section -> key -> text mapping into an :class:`ExperimentConfig`."""
    raw = _resolve(mapping, source)
    v = {}
    for section, keys in raw.items():
        v[section] = {}
        for key, text in keys.items():
            kind = SCHEMA[section][key][0]
            v[section][key] = _parse_value(kind, text, '{} [{}] {}'.format(source, section, key))

    zfs, fld, sites, kin, cw = v['zfs'], v['field'], v['sites'], v['kinetics'], v['cw']
    dec, drv, rd, exp = v['decoherence'], v['drive'], v['readout'], v['experiment']
    try:
        rates = kinetics.KineticRates.from_lifetimes(
            kin['lifetimes_us'], pump_rate=kin['pump_rate'], s1_decay_rate=kin['s1_decay_rate'],
            isc_yield=kin['isc_yield'], branching=kin['branching'])
        t2 = {spin.Transition.parse(k[3:]): val for k, val in dec.items() if k.startswith('t2_')}
        sigma = dec['sigma_inh'] if 'sigma_inh' in dec else engine.sigma_from_t2star(dec['t2star'])
        decoherence = engine.DecoherenceParams(t2, sigma)
        drive = engine.DriveCalibration(drv['kappa'])
    except TripletSimError as e:
        raise ConfigError('{}: {}'.format(source, e))
    if any(tau <= 0 for tau in kin['lifetimes_us']):
        raise ConfigError('{} [kinetics] lifetimes_us: lifetimes must be > 0'.format(source))
    try:
        engine.dephasing_rates(decoherence, rates.with_pump(0.0))
    except TripletSimError as e:
        raise ConfigError('{} [decoherence]: {}'.format(source, e))

    direction = np.array(fld['direction'])
    norm = float(np.linalg.norm(direction))
    if norm == 0:
        raise ConfigError('{} [field] direction: must be a non-zero vector'.format(source))
    direction = tuple(float(c) for c in direction / norm)
    field = tuple(fld['magnitude_mT'] * c for c in direction)
    site_a = spin.MolecularOrientation.from_degrees(*sites['site_a_euler_deg'])
    b_deg = sites.get('site_b_euler_deg')
    if b_deg is None:
        a = sites['site_a_euler_deg']
        b_deg = (a[0] + sites['herringbone_deg'], a[1], a[2])
    site_b = spin.MolecularOrientation.from_degrees(*b_deg)
    if cw['freq_start'] >= cw['freq_stop']:
        raise ConfigError('{} [cw] freq_start must be below freq_stop'.format(source))

    sweeps = {k: val for k, val in exp.items() if k not in ('pair', 'noise')}
    return ExperimentConfig(
        zfs=spin.ZfsParameters(zfs['D'], zfs['E']),
        rates=rates,
        cw_rates=rates.with_pump(cw['pump_rate']),
        cw_mixing_rate=cw['mixing_rate'],
        cw_linewidth=cw['linewidth'],
        cw_freqs=(cw['freq_start'], cw['freq_stop'], cw['freq_steps']),
        decoherence=decoherence,
        quadrature_order=dec['quadrature_order'],
        drive=drive,
        rabi=drv['rabi'],
        pulsed_odmr_rabi=drv['pulsed_odmr_rabi'],
        laser=rd['laser'],
        delay=rd['delay'],
        read=rd['read'],
        sites=(site_a, site_b),
        field=field,
        field_direction=direction,
        field_scan=(fld['scan_start_mT'], fld['scan_stop_mT'], fld['scan_steps']),
        pair=exp['pair'],
        noise=exp['noise'],
        sweeps=sweeps,
        sensing=dict(v['sensing']),
        raw={s: dict(keys) for s, keys in raw.items()},
        source=source,
    )


def _read_ini(text, source):
    parser = configparser.ConfigParser(interpolation=None, inline_comment_prefixes=('#', ';'))
    parser.optionxform = str
    try:
        parser.read_string(text, source=source)
    except configparser.Error as e:
        raise ConfigError('{}: {}'.format(source, e))
    return {s: dict(parser.items(s)) for s in parser.sections()}


def load_sidecar(path):
    """Return (mapping, document) from a JSON sidecar written by the CLI."""
    try:
        with open(path, encoding='utf-8') as f:
            doc = json.load(f)
    except OSError as e:
        raise ConfigError('cannot read {}: {}'.format(path, e.strerror))
    except ValueError as e:
        raise ConfigError('{}: not a valid sidecar: {}'.format(path, e))
    if not isinstance(doc, dict) or not isinstance(doc.get('config'), dict):
        raise ConfigError('{}: sidecar has no config mapping'.format(path))
    return doc['config'], doc


def _profile_mapping(name):
    if name not in PROFILES:
        raise ConfigError('unknown profile {!r}, expected one of {}'.format(name, ', '.join(PROFILES)))
    text = importlib.resources.files('tripletsim').joinpath('profiles', name + '.cfg').read_text('utf-8')
    return _read_ini(text, name + '.cfg')


def load_profile(name):
    return from_mapping(_profile_mapping(name), name + '.cfg')


def load_config(path=None, profile=None):
    """Load *path* (INI or JSON sidecar) on top of *profile* (default crystal).

    Keys in the file override the profile; unknown keys are rejected.
    """
    base = {}
    source = '<defaults>'
    if profile is not None:
        base = _profile_mapping(profile)
        source = profile + '.cfg'
    if path is None:
        return from_mapping(base, source)
    path = os.fspath(path)
    if path.endswith('.json'):
        mapping, _ = load_sidecar(path)
    else:
        try:
            with open(path, encoding='utf-8') as f:
                text = f.read()
        except OSError as e:
            raise ConfigError('cannot read {}: {}'.format(path, e.strerror))
        mapping = _read_ini(text, path)
    merged = {s: dict(keys) for s, keys in base.items()}
    for section, keys in mapping.items():
        if not isinstance(keys, dict):
            raise ConfigError('{}: section {!r} must be a mapping'.format(path, section))
        merged.setdefault(section, {}).update({k: str(val) for k, val in keys.items()})
    return from_mapping(merged, path)
