"""Parser, validator and canonical printer for ``.pseq`` pulse sequences.

Grammar, one statement per line, ``#`` starts a comment::

    reference dark|inverted [TONE]
    tone NAME freq MHZ rabi MHZ [pair Tx-Tz]
    laser US
    mw TONE NS [phase DEG] [detuning MHZ]
    wait US
    read US [delay US]
    sweep NAME START STOP STEPS

Any numeric operand except ``STEPS`` may be written ``$NAME``; each such
symbol must be bound by exactly one ``sweep`` line. A sequence starts with
``laser`` and ends with its only ``read``.
"""
import dataclasses
import itertools
import math
import re

import numpy as np

from tripletsim import spin
from tripletsim.support import SequenceError

__all__ = ['Symbol', 'ToneDecl', 'Laser', 'Mw', 'Wait', 'Read', 'SweepDecl', 'SequenceAst',
           'parse', 'print_sequence', 'expand_sweeps', 'sweep_points', 'format_value', 'REFERENCES']

REFERENCES = ('dark', 'inverted')
MAX_SWEEPS = 2

_NUMBER_RE = re.compile(r'[+-]?(?:\d+(?:\.\d*)?|\.\d+)(?:[eE][+-]?\d+)?\Z', re.ASCII)
_NAME_RE = re.compile(r'[A-Za-z_][A-Za-z0-9_]*\Z')
_TOKEN_RE = re.compile(r'\S+')


@dataclasses.dataclass(frozen=True)
class Symbol:
    name: str

    def __str__(self):
        return '$' + self.name


def _pos():
    return dataclasses.field(default=0, compare=False, repr=False)


@dataclasses.dataclass(frozen=True)
class ToneDecl:
    name: str
    frequency: object
    rabi: object
    pair: object = None
    line: int = _pos()


@dataclasses.dataclass(frozen=True)
class Laser:
    duration: object
    line: int = _pos()


@dataclasses.dataclass(frozen=True)
class Mw:
    tone: str
    duration: object
    phase: object = 0.0
    detuning: object = 0.0
    line: int = _pos()
    col: int = _pos()


@dataclasses.dataclass(frozen=True)
class Wait:
    duration: object
    line: int = _pos()


@dataclasses.dataclass(frozen=True)
class Read:
    duration: object
    delay: object = None
    line: int = _pos()


@dataclasses.dataclass(frozen=True)
class SweepDecl:
    name: str
    start: float
    stop: float
    steps: int
    line: int = _pos()

    def values(self):
        return [float(v) for v in np.linspace(self.start, self.stop, self.steps)]


@dataclasses.dataclass(frozen=True)
class SequenceAst:
    tones: tuple = ()
    statements: tuple = ()
    sweeps: tuple = ()
    reference: str = 'dark'
    reference_tone: str = None
    bindings: tuple = dataclasses.field(default=(), compare=False)

    def tone(self, name):
        for t in self.tones:
            if t.name == name:
                return t
        raise KeyError(name)

    @property
    def is_concrete(self):
        return not self.sweeps


class _Line:
    """Tokens of one source line with their 1-based columns."""

    def __init__(self, number, text):
        self.number = number
        self.tokens = [(m.group(), m.start() + 1) for m in _TOKEN_RE.finditer(text)]

    def fail(self, msg, index=None):
        if index is None or index >= len(self.tokens):
            col = self.tokens[-1][1] + len(self.tokens[-1][0]) if self.tokens else 1
        else:
            col = self.tokens[index][1]
        raise SequenceError(msg, self.number, col)

    def word(self, index, what):
        if index >= len(self.tokens):
            self.fail('missing {}'.format(what))
        return self.tokens[index][0]

    def name(self, index, what):
        text = self.word(index, what)
        if not _NAME_RE.match(text):
            self.fail('invalid {} {!r}'.format(what, text), index)
        return text

    def value(self, index, what, non_negative=False, positive=False):
        text = self.word(index, what)
        if text.startswith('$'):
            if not _NAME_RE.match(text[1:]):
                self.fail('invalid symbol {!r}'.format(text), index)
            return Symbol(text[1:])
        if not _NUMBER_RE.match(text):
            self.fail('expected a number for {}, got {!r}'.format(what, text), index)
        v = float(text)
        if not math.isfinite(v):
            self.fail('{} out of range: {}'.format(what, text), index)
        if non_negative and v < 0:
            self.fail('negative {}: {}'.format(what, text), index)
        if positive and v <= 0:
            self.fail('{} must be > 0, got {}'.format(what, text), index)
        return v

    def options(self, start, allowed):
        """Parse trailing ``key value`` pairs; returns {key: (token index of value)}."""
        found = {}
        i = start
        while i < len(self.tokens):
            key = self.tokens[i][0]
            if key not in allowed:
                self.fail('unexpected {!r}'.format(key), i)
            if key in found:
                self.fail('duplicate option {!r}'.format(key), i)
            if i + 1 >= len(self.tokens):
                self.fail('missing value for {!r}'.format(key))
            found[key] = i + 1
            i += 2
        return found

    def expect_end(self, count):
        if len(self.tokens) > count:
            self.fail('unexpected {!r}'.format(self.tokens[count][0]), count)


def _parse_tone(ln):
    name = ln.name(1, 'tone name')
    opts = ln.options(2, ('freq', 'rabi', 'pair'))
    for key in ('freq', 'rabi'):
        if key not in opts:
            ln.fail('tone {!r} needs {!r}'.format(name, key))
    freq = ln.value(opts['freq'], 'frequency', positive=True)
    rabi = ln.value(opts['rabi'], 'Rabi frequency', non_negative=True)
    pair = None
    if 'pair' in opts:
        text = ln.word(opts['pair'], 'pair')
        try:
            pair = spin.Transition.parse(text)
        except ValueError as e:
            ln.fail(str(e), opts['pair'])
    return ToneDecl(name, freq, rabi, pair, line=ln.number)


def _parse_line(ln):
    keyword = ln.tokens[0][0]
    if keyword == 'tone':
        return _parse_tone(ln)
    if keyword == 'laser':
        ln.expect_end(2)
        return Laser(ln.value(1, 'duration', non_negative=True), line=ln.number)
    if keyword == 'wait':
        ln.expect_end(2)
        return Wait(ln.value(1, 'duration', non_negative=True), line=ln.number)
    if keyword == 'read':
        duration = ln.value(1, 'duration', non_negative=True)
        opts = ln.options(2, ('delay',))
        delay = ln.value(opts['delay'], 'delay', non_negative=True) if 'delay' in opts else None
        return Read(duration, delay, line=ln.number)
    if keyword == 'mw':
        tone = ln.name(1, 'tone name')
        duration = ln.value(2, 'duration', non_negative=True)
        opts = ln.options(3, ('phase', 'detuning'))
        phase = ln.value(opts['phase'], 'phase') if 'phase' in opts else 0.0
        detuning = ln.value(opts['detuning'], 'detuning') if 'detuning' in opts else 0.0
        return Mw(tone, duration, phase, detuning, line=ln.number, col=ln.tokens[1][1])
    if keyword == 'sweep':
        name = ln.name(1, 'sweep symbol')
        start = ln.value(2, 'sweep start')
        stop = ln.value(3, 'sweep stop')
        if isinstance(start, Symbol) or isinstance(stop, Symbol):
            ln.fail('sweep bounds must be numbers', 2)
        steps_text = ln.word(4, 'sweep steps')
        if not re.fullmatch(r'[0-9]{1,9}', steps_text) or int(steps_text) < 2:
            ln.fail('sweep steps must be an integer >= 2, got {!r}'.format(steps_text), 4)
        ln.expect_end(5)
        return SweepDecl(name, start, stop, int(steps_text), line=ln.number)
    if keyword == 'reference':
        mode = ln.word(1, 'reference mode')
        if mode not in REFERENCES:
            ln.fail('unknown reference {!r}, expected dark or inverted'.format(mode), 1)
        tone = None
        if len(ln.tokens) > 2:
            if mode != 'inverted':
                ln.fail('only an inverted reference takes a tone', 2)
            tone = ln.name(2, 'tone name')
        ln.expect_end(3)
        return ('reference', mode, tone, ln.number)
    ln.fail('unknown statement {!r}'.format(keyword), 0)


def _symbols(node):
    for f in dataclasses.fields(node):
        value = getattr(node, f.name)
        if isinstance(value, Symbol):
            yield value.name


def _validate(tones, statements, sweeps, reference_tone, reference_line):
    names = {}
    for t in tones:
        if t.name in names:
            raise SequenceError('duplicate tone {!r}'.format(t.name), t.line)
        names[t.name] = t
    for st in statements:
        if isinstance(st, Mw) and st.tone not in names:
            raise SequenceError('unknown tone {!r}'.format(st.tone), st.line, st.col or 1)
    if reference_tone is not None and reference_tone not in names:
        raise SequenceError('unknown tone {!r}'.format(reference_tone), reference_line)

    if len(sweeps) > MAX_SWEEPS:
        raise SequenceError('at most {} sweeps are supported'.format(MAX_SWEEPS), sweeps[MAX_SWEEPS].line)
    declared = {}
    for sw in sweeps:
        if sw.name in declared:
            raise SequenceError('symbol ${} swept twice'.format(sw.name), sw.line)
        declared[sw.name] = sw
    used = set()
    for node in tones + statements:
        for name in _symbols(node):
            if name not in declared:
                raise SequenceError('symbol ${} has no sweep'.format(name), node.line)
            used.add(name)
    for sw in sweeps:
        if sw.name not in used:
            raise SequenceError('sweep ${} is not used by any statement'.format(sw.name), sw.line)

    if not statements:
        raise SequenceError('sequence must start with laser and end with read', 1)
    if not isinstance(statements[0], Laser):
        raise SequenceError('sequence must start with a laser statement', statements[0].line)
    if not isinstance(statements[-1], Read):
        raise SequenceError('sequence must end with a read statement', statements[-1].line)
    for st in statements[:-1]:
        if isinstance(st, Read):
            raise SequenceError('read is only allowed as the last statement', st.line)


def parse(text):
    """Parse *text* into a validated :class:`SequenceAst`.

    Every failure is a :class:`SequenceError` carrying a line and column.
    """
    if isinstance(text, bytes):
        try:
            text = text.decode('utf-8')
        except UnicodeDecodeError as e:
            raise SequenceError('input is not UTF-8: {}'.format(e.reason), 1)
    tones, statements, sweeps = [], [], []
    reference, reference_tone, reference_line = 'dark', None, 0
    for number, raw in enumerate(text.splitlines(), 1):
        ln = _Line(number, raw.split('#', 1)[0])
        if not ln.tokens:
            continue
        node = _parse_line(ln)
        if isinstance(node, tuple):
            if reference_line:
                ln.fail('duplicate reference directive', 0)
            _, reference, reference_tone, reference_line = node
        elif isinstance(node, ToneDecl):
            tones.append(node)
        elif isinstance(node, SweepDecl):
            sweeps.append(node)
        else:
            statements.append(node)
    tones, statements, sweeps = tuple(tones), tuple(statements), tuple(sweeps)
    _validate(tones, statements, sweeps, reference_tone, reference_line)
    return SequenceAst(tones, statements, sweeps, reference, reference_tone)


def format_value(v):
    if isinstance(v, Symbol):
        return str(v)
    v = float(v)
    if v.is_integer() and abs(v) < 1e15:
        return '%d' % v
    return repr(v)


def _print_node(node):
    if isinstance(node, ToneDecl):
        out = 'tone {} freq {} rabi {}'.format(node.name, format_value(node.frequency), format_value(node.rabi))
        if node.pair is not None:
            out += ' pair {}'.format(node.pair)
        return out
    if isinstance(node, Laser):
        return 'laser {}'.format(format_value(node.duration))
    if isinstance(node, Wait):
        return 'wait {}'.format(format_value(node.duration))
    if isinstance(node, Read):
        out = 'read {}'.format(format_value(node.duration))
        if node.delay is not None:
            out += ' delay {}'.format(format_value(node.delay))
        return out
    if isinstance(node, Mw):
        out = 'mw {} {}'.format(node.tone, format_value(node.duration))
        if isinstance(node.phase, Symbol) or node.phase != 0:
            out += ' phase {}'.format(format_value(node.phase))
        if isinstance(node.detuning, Symbol) or node.detuning != 0:
            out += ' detuning {}'.format(format_value(node.detuning))
        return out
    if isinstance(node, SweepDecl):
        return 'sweep {} {} {} {}'.format(node.name, format_value(node.start), format_value(node.stop), node.steps)
    raise TypeError('cannot print {!r}'.format(node))


def print_sequence(ast):
    """Canonical text of *ast*: reference, tones, statements, sweeps."""
    lines = []
    if ast.reference != 'dark':
        lines.append('reference {}{}'.format(
            ast.reference, ' ' + ast.reference_tone if ast.reference_tone else ''))
    lines.extend(_print_node(n) for n in ast.tones + ast.statements + ast.sweeps)
    return '\n'.join(lines) + '\n'


def _bind(node, values):
    changes = {}
    for f in dataclasses.fields(node):
        value = getattr(node, f.name)
        if isinstance(value, Symbol):
            if value.name not in values:
                raise SequenceError('symbol ${} has no sweep'.format(value.name), node.line)
            changes[f.name] = values[value.name]
    if not changes:
        return node
    bound = dataclasses.replace(node, **changes)
    for name in ('duration', 'delay'):
        v = getattr(bound, name, None)
        if v is not None and not isinstance(v, Symbol) and v < 0:
            raise SequenceError('negative {}: {}'.format(name, format_value(v)), node.line)
    if isinstance(bound, ToneDecl) and bound.frequency <= 0:
        raise SequenceError('frequency must be > 0, got {}'.format(format_value(bound.frequency)), node.line)
    if isinstance(bound, ToneDecl) and bound.rabi < 0:
        raise SequenceError('negative Rabi frequency: {}'.format(format_value(bound.rabi)), node.line)
    return bound


def sweep_points(ast):
    """Sweep values of every expanded instance, first-declared sweep outermost."""
    return list(itertools.product(*(sw.values() for sw in ast.sweeps)))


def expand_sweeps(ast):
    """Cartesian expansion of *ast* into concrete sequences (row-major)."""
    if len(ast.sweeps) > MAX_SWEEPS:
        raise SequenceError('at most {} sweeps are supported'.format(MAX_SWEEPS), ast.sweeps[MAX_SWEEPS].line)
    names = [sw.name for sw in ast.sweeps]
    used = {name for node in ast.tones + ast.statements for name in _symbols(node)}
    for sw in ast.sweeps:
        if sw.name not in used:
            raise SequenceError('sweep ${} is not used by any statement'.format(sw.name), sw.line)
    out = []
    for point in sweep_points(ast):
        values = dict(zip(names, point))
        out.append(SequenceAst(
            tuple(_bind(t, values) for t in ast.tones),
            tuple(_bind(s, values) for s in ast.statements),
            (), ast.reference, ast.reference_tone, tuple(zip(names, point))))
    return out
