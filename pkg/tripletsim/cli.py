"""Command-line entry point.

::

    tripletsim experiment rabi --config crystal.cfg --out results/
    tripletsim run sequence.pseq --jobs 4
    tripletsim sensitivity --profile film --mode dc
    tripletsim validate sequence.pseq

Exit status is 0 on success, 2 for invalid input (nothing is written) and 3
when a fit did not converge (data is still written).
"""
import argparse
import csv
import io
import json
import logging
import os
import sys

import numpy as np

import tripletsim
from tripletsim import config
from tripletsim import debug
from tripletsim import experiments
from tripletsim import fitting
from tripletsim import seqlang
from tripletsim import sensitivity
from tripletsim.support import ConfigError, TripletSimError

__all__ = ['main', 'cmd_experiment', 'cmd_run', 'cmd_sensitivity', 'cmd_validate', 'RunManifest',
           'get_logger', 'LoggerNull', 'LoggerFileWrapper', 'EXIT_OK', 'EXIT_INVALID', 'EXIT_FIT']

EXIT_OK = 0
EXIT_INVALID = 2
EXIT_FIT = 3

FLOAT_FORMAT = '%.17e'


def get_logger(log, debug):
    if callable(getattr(log, 'info', None)) \
       and callable(getattr(log, 'debug', None)):
        return log
    else:
        return LoggerFileWrapper(log or sys.stderr, debug)


class LoggerNull:
    def __init__(self):
        pass

    def error(self, msg, *args, **kwargs):
        pass

    def info(self, msg, *args, **kwargs):
        pass

    def debug(self, msg, *args, **kwargs):
        pass

    def write(self, msg, *args):
        pass


class LoggerFileWrapper(LoggerNull):
    def __init__(self, log, debug):
        self.log = log
        self._debug = debug

    def error(self, msg, *args, **kwargs):
        self.write(msg, *args)

    def info(self, msg, *args, **kwargs):
        self.write(msg, *args)

    def debug(self, msg, *args, **kwargs):
        if self._debug:
            self.write(msg, *args)

    def write(self, msg, *args):
        msg = msg + '\n'
        if args:
            msg = msg % args
        self.log.write(msg)


class RunManifest:
    """What to run and where to write it, resolved from the command line."""

    def __init__(self, command, config_path=None, profile=None, target=None, out='.', seed=None, jobs=None,
                 mode=None, sweep=None):
        self.command = command
        self.config_path = config_path
        self.profile = profile
        self.target = target
        self.out = out
        self.seed = seed
        self.jobs = jobs
        self.mode = mode
        self.sweep = sweep

    @classmethod
    def from_args(cls, args):
        return cls(args.command, getattr(args, 'config', None), getattr(args, 'profile', None),
                   getattr(args, 'target', None), getattr(args, 'out', '.'), getattr(args, 'seed', None),
                   getattr(args, 'jobs', None), getattr(args, 'mode', None), getattr(args, 'sweep', None))

    def __repr__(self):
        return '<RunManifest {} target={!r} config={!r}>'.format(self.command, self.target, self.config_path)


def _sidecar(path):
    if path and os.fspath(path).endswith('.json'):
        return config.load_sidecar(path)[1]
    return {}


def _load(manifest, sidecar):
    cfg = config.load_config(manifest.config_path, manifest.profile)
    seed = manifest.seed
    if seed is None:
        seed = sidecar.get('seed', config.default_seed())
    return cfg, int(seed)


def _csv_text(trace):
    head, cols = trace.columns()
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    writer.writerow(head)
    for row in zip(*cols):
        writer.writerow([FLOAT_FORMAT % v for v in row])
    return buf.getvalue()


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return [_jsonable(v) for v in value.tolist()]
    if isinstance(value, np.generic):
        return value.item()
    return value


def _write_outputs(manifest, name, trace, cfg, fits, sequence=None, preset=None):
    os.makedirs(manifest.out, exist_ok=True)
    head, _ = trace.columns()
    doc = {
        'tripletsim': tripletsim.__version__,
        'command': manifest.command,
        'preset': preset,
        'seed': cfg.seed,
        'config': cfg.raw,
        'sequence': sequence,
        'columns': head,
        'metadata': _jsonable({k: v for k, v in trace.metadata.items() if k != 'sequence'}),
        'fits': {k: _jsonable(fit.as_dict()) for k, fit in fits.items()},
    }
    csv_text = _csv_text(trace)
    json_text = json.dumps(doc, indent=2) + '\n'
    base = os.path.join(manifest.out, name)
    with open(base + '.csv', 'w', encoding='utf-8', newline='') as f:
        f.write(csv_text)
    with open(base + '.json', 'w', encoding='utf-8') as f:
        f.write(json_text)
    return base + '.csv', base + '.json'


def _fit_status(fits, log):
    failed = [name for name, fit in fits.items() if not fit.converged]
    for name in failed:
        log.error('fit %s did not converge: %s', name, fits[name].message)
    return EXIT_FIT if failed else EXIT_OK


def cmd_experiment(manifest, log):
    sidecar = _sidecar(manifest.config_path)
    preset = manifest.target or sidecar.get('preset')
    if not preset:
        raise ConfigError('no preset given; choose one of: {}'.format(', '.join(experiments.PRESETS)))
    cfg, seed = _load(manifest, sidecar)
    cfg = cfg.with_preset(preset, seed)
    log.debug('running %s from %s with seed %d', preset, cfg.source, seed)
    trace = experiments.run_preset(cfg, manifest.jobs)
    fits = experiments.fit_preset(trace, cfg)
    paths = _write_outputs(manifest, preset, trace, cfg, fits, trace.metadata.get('sequence'), preset)
    log.info('wrote %s and %s', *paths)
    for name, fit in fits.items():
        if fit.converged:
            log.info('%s: %s', name, ', '.join('{}={:.6g}'.format(k, v) for k, v in fit.params.items()))
    return _fit_status(fits, log)


def _read_sequence(target):
    if target.endswith('.json'):
        doc = config.load_sidecar(target)[1]
        if not doc.get('sequence'):
            raise ConfigError('{}: sidecar carries no sequence'.format(target))
        return doc['sequence'], doc
    try:
        with open(target, 'rb') as f:
            return f.read(), {}
    except OSError as e:
        raise ConfigError('cannot read {}: {}'.format(target, e.strerror))


def cmd_run(manifest, log):
    text, sidecar = _read_sequence(manifest.target)
    ast = seqlang.parse(text)
    if manifest.config_path is None and sidecar:
        manifest.config_path = manifest.target
    cfg, seed = _load(manifest, sidecar or _sidecar(manifest.config_path))
    cfg = cfg.with_preset(None, seed)
    trace = experiments.run_sequence(ast, cfg, manifest.jobs)
    if cfg.noise > 0:
        trace = fitting.add_noise(trace, cfg.noise, np.random.default_rng(seed))
    name = os.path.splitext(os.path.basename(manifest.target))[0]
    paths = _write_outputs(manifest, name, trace, cfg, {}, seqlang.print_sequence(ast))
    log.info('wrote %s and %s', *paths)
    return EXIT_OK


def cmd_sensitivity(manifest, log, stdout):
    if manifest.profile:
        params = sensitivity.profile(manifest.profile, manifest.mode or 'dc')
    else:
        cfg = config.load_config(manifest.config_path)
        params = sensitivity.from_config(cfg.sensing, manifest.mode)
    result = sensitivity.eta_v(params)
    stdout.write('eta_V = {:.4g} nT um^3/2 Hz^-1/2 ({} mode, rho_S = {:.4g} um^-3, reference {:g})\n'.format(
        result.eta_v_nt, params.mode, result.rho_s, sensitivity.reference_sensitivity(params.mode)))
    if manifest.sweep:
        axis, start, stop, steps = manifest.sweep
        try:
            values = np.linspace(float(start), float(stop), int(steps))
        except ValueError:
            raise ConfigError('--sweep needs AXIS START STOP STEPS, got {}'.format(' '.join(manifest.sweep)))
        rows = sensitivity.sweep_eta(params, axis, values)
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator='\n')
        writer.writerow([axis, 'eta_v_nT', 'rho_s_um3'])
        for value, res in rows:
            writer.writerow([FLOAT_FORMAT % value, FLOAT_FORMAT % res.eta_v_nt, FLOAT_FORMAT % res.rho_s])
        if manifest.out and manifest.out != '-':
            with open(manifest.out, 'w', encoding='utf-8', newline='') as f:
                f.write(buf.getvalue())
            log.info('wrote %s', manifest.out)
        else:
            stdout.write(buf.getvalue())
    return EXIT_OK


def cmd_validate(manifest, log, stdout):
    text, _ = _read_sequence(manifest.target)
    ast = seqlang.parse(text)
    stdout.write(seqlang.print_sequence(ast))
    log.info('%s: %d tones, %d statements, %d points', manifest.target, len(ast.tones),
             len(ast.statements), len(seqlang.sweep_points(ast)))
    return EXIT_OK


def _positive_int(text):
    value = int(text)
    if value < 1:
        raise argparse.ArgumentTypeError('must be >= 1')
    return value


def build_parser():
    parser = argparse.ArgumentParser(prog='tripletsim', description='Triplet-spin ODMR simulator.')
    parser.add_argument('--version', action='version', version=tripletsim.__version__)
    sub = parser.add_subparsers(dest='command', required=True)

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', help='INI config file or JSON sidecar of an earlier run')
    common.add_argument('--debug', action='store_true', help='verbose diagnostics on standard error')
    common.add_argument('--quiet', action='store_true', help='no messages at all; rely on the exit status')

    sim = argparse.ArgumentParser(add_help=False, parents=[common])
    sim.add_argument('--profile', choices=config.PROFILES, help='shipped parameter profile (default crystal)')
    sim.add_argument('--out', default='.', help='output directory (default: current directory)')
    sim.add_argument('--seed', type=int, default=None, help='noise seed (default: $TRIPLETSIM_SEED or {})'.format(
        config.DEFAULT_SEED))
    sim.add_argument('--jobs', type=_positive_int, default=None, help='parallel sweep points ($TRIPLETSIM_JOBS)')

    p = sub.add_parser('experiment', parents=[sim], help='run a preset experiment')
    p.add_argument('target', nargs='?', metavar='PRESET', help='one of: {}'.format(', '.join(experiments.PRESETS)))
    p.add_argument('--preset', dest='preset_opt', choices=experiments.PRESETS)

    p = sub.add_parser('run', parents=[sim], help='run a .pseq sequence')
    p.add_argument('target', metavar='SEQUENCE')

    p = sub.add_parser('sensitivity', parents=[common], help='volume-normalised sensitivity')
    p.add_argument('--profile', choices=sensitivity.PROFILES + tuple(sensitivity.PROFILE_ALIASES))
    p.add_argument('--mode', choices=('dc', 'ac'))
    p.add_argument('--sweep', nargs=4, metavar=('AXIS', 'START', 'STOP', 'STEPS'))
    p.add_argument('--out', default='-', help='CSV file for the sweep table (default: standard output)')

    p = sub.add_parser('validate', parents=[common], help='parse a .pseq file and print its canonical form')
    p.add_argument('target', metavar='SEQUENCE')
    return parser


def main(argv=None, log=None, stdout=None):
    stdout = stdout or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return EXIT_INVALID if e.code else EXIT_OK
    log = LoggerNull() if args.quiet else get_logger(log, args.debug)
    if args.debug:
        logging.basicConfig(level=logging.DEBUG, stream=sys.stderr)
        debug.sweep_exceptions(True)
    if getattr(args, 'preset_opt', None):
        args.target = args.preset_opt
    manifest = RunManifest.from_args(args)
    try:
        if manifest.jobs is None and manifest.command in ('experiment', 'run'):
            manifest.jobs = config.default_jobs()
        if args.command == 'experiment':
            return cmd_experiment(manifest, log)
        if args.command == 'run':
            return cmd_run(manifest, log)
        if args.command == 'sensitivity':
            return cmd_sensitivity(manifest, log, stdout)
        return cmd_validate(manifest, log, stdout)
    except TripletSimError as e:
        log.error('tripletsim: %s', e)
        return EXIT_INVALID
    except OSError as e:
        log.error('tripletsim: %s', e)
        return EXIT_INVALID
