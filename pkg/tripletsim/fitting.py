"""Least-squares models for contrast traces.

Fits never raise on failure: :class:`FitResult` carries ``converged=False``
and a message instead, with empty parameter and error maps.
"""
import dataclasses
import logging
import math

import numpy as np
from scipy import optimize

__all__ = ['FitResult', 'fit_damped_cosine', 'fit_exponential', 'fit_sqrt_power', 'add_noise',
           'MAX_ITERATIONS', 'RESTARTS']

log = logging.getLogger('tripletsim.fitting')

MAX_ITERATIONS = 200
RESTARTS = 5
_FLAT_TOL = 1e-12


@dataclasses.dataclass
class FitResult:
    model: str
    params: dict = dataclasses.field(default_factory=dict)
    errors: dict = dataclasses.field(default_factory=dict)
    residual_norm: float = float('nan')
    converged: bool = False
    message: str = ''

    def as_dict(self):
        return {
            'model': self.model,
            'converged': self.converged,
            'message': self.message,
            'residual_norm': self.residual_norm,
            'params': dict(self.params),
            'errors': dict(self.errors),
        }

    def __getitem__(self, name):
        return self.params[name]


def _failed(model, message):
    log.debug('%s fit not converged: %s', model, message)
    return FitResult(model, message=message)


def _xy(trace):
    if hasattr(trace, 'x') and hasattr(trace, 'y'):
        x, y = trace.x, trace.y
    else:
        x, y = trace
    x = np.asarray(x, dtype=float).ravel()
    y = np.asarray(y, dtype=float).ravel()
    if x.shape != y.shape:
        raise ValueError('x and y lengths differ: {} != {}'.format(x.size, y.size))
    return x, y


def _is_flat(y):
    return np.ptp(y) <= _FLAT_TOL * max(1.0, float(np.max(np.abs(y))))


def _covariance(res, n):
    dof = n - res.x.size
    if dof <= 0:
        return None
    s2 = 2.0 * res.cost / dof
    jtj = res.jac.T @ res.jac
    try:
        cov = np.linalg.pinv(jtj) * s2
    except np.linalg.LinAlgError:
        return None
    if not np.all(np.isfinite(cov)):
        return None
    return cov


def _best_of(attempts, fun, jac, bounds, x, y):
    best = None
    for p0 in attempts:
        p0 = np.clip(p0, bounds[0], bounds[1])
        try:
            res = optimize.least_squares(fun, p0, jac=jac, bounds=bounds, x_scale='jac',
                                         max_nfev=MAX_ITERATIONS, args=(x, y))
        except (ValueError, np.linalg.LinAlgError) as e:
            log.debug('least_squares raised %s', e)
            continue
        if best is None or res.cost < best.cost:
            best = res
        if res.success and res.cost <= 1e-20 * max(1.0, float(y @ y)):
            break
    return best


def _spectral_peak(x, y):
    """Frequency of the strongest non-DC component of the detrended trace."""
    n = x.size
    grid = np.linspace(x[0], x[-1], n)
    yy = np.interp(grid, x, y)
    yy = yy - np.polyval(np.polyfit(grid, yy, 1), grid)
    dx = grid[1] - grid[0]
    n_fft = 8 * n
    spectrum = np.abs(np.fft.rfft(yy * np.hanning(n), n_fft))
    freqs = np.fft.rfftfreq(n_fft, dx)
    k = int(np.argmax(spectrum[1:])) + 1
    return float(freqs[k])


def _cosine_model(envelope, fixed_decay):
    def envelope_of(p, x):
        if envelope == 'gaussian':
            env = np.exp(-(p[1] * x) ** 2)
            if fixed_decay:
                env = env * np.exp(-x / fixed_decay)
            return env
        return np.exp(-p[1] * x)

    def model(p, x):
        return p[0] * envelope_of(p, x) * np.cos(2 * math.pi * p[2] * x + p[3]) + p[4]

    def residual(p, x, y):
        return model(p, x) - y

    def jac(p, x, y):
        env = envelope_of(p, x)
        psi = 2 * math.pi * p[2] * x + p[3]
        c, s = np.cos(psi), np.sin(psi)
        out = np.empty((x.size, 5))
        out[:, 0] = env * c
        if envelope == 'gaussian':
            out[:, 1] = -2 * p[1] * x ** 2 * p[0] * env * c
        else:
            out[:, 1] = -x * p[0] * env * c
        out[:, 2] = -p[0] * env * s * 2 * math.pi * x
        out[:, 3] = -p[0] * env * s
        out[:, 4] = 1.0
        return out

    return model, residual, jac


def fit_damped_cosine(trace, envelope='exponential', fixed_decay=None, seed=0):
    """Fit A e(x) cos(2pi f x + phi) + c.

    e(x) is exp(-rate x) for ``envelope='exponential'`` and
    exp(-(rate x)^2) exp(-x/fixed_decay) for ``envelope='gaussian'``. The
    reported ``tau`` is 1/rate in x units; ``frequency`` is in 1/x units.
    """
    name = 'damped_cosine'
    x, y = _xy(trace)
    if x.size < 8:
        return _failed(name, 'need at least 8 points, got {}'.format(x.size))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return _failed(name, 'trace has non-finite values')
    if _is_flat(y):
        return _failed(name, 'constant trace, no oscillation to fit')
    order = np.argsort(x)
    x, y = x[order], y[order]
    span = x[-1] - x[0]
    if span <= 0:
        return _failed(name, 'x values do not span an interval')

    f0 = _spectral_peak(x, y)
    c0 = float(np.mean(y))
    z = np.sum((y - c0) * np.exp(-2j * math.pi * f0 * x))
    phi0 = float(np.angle(z))
    a0 = max(np.ptp(y) / 2.0, 2.0 * abs(z) / x.size)
    half = x.size // 2
    s1, s2 = np.std(y[:half]), np.std(y[half:])
    ratio = s1 / s2 if s2 > 0 else 1.0
    rate0 = max(0.0, math.log(ratio) / (span / 2.0)) if ratio > 1 else 0.1 / span
    if envelope == 'gaussian':
        rate0 = math.sqrt(rate0 / (span / 2.0)) if rate0 > 0 else 1.0 / span
    p0 = np.array([a0, rate0, f0, phi0, c0])

    model, residual, jac = _cosine_model(envelope, fixed_decay)
    lower = [-np.inf, 0.0, 0.0, -np.inf, -np.inf]
    upper = [np.inf, np.inf, np.inf, np.inf, np.inf]
    rng = np.random.default_rng(seed)
    attempts = [p0] + [p0 * np.array([1, rng.uniform(0.3, 3.0), rng.uniform(0.9, 1.1), 1, 1])
                       + np.array([0, 0, 0, rng.uniform(-1, 1), 0]) for _ in range(RESTARTS)]
    res = _best_of(attempts, residual, jac, (lower, upper), x, y)
    if res is None or not res.success:
        return _failed(name, 'least squares did not converge' if res is None else res.message)
    cov = _covariance(res, x.size)
    if cov is None:
        return _failed(name, 'covariance could not be estimated')

    a, rate, f, phi, c = (float(v) for v in res.x)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if a < 0:
        a, phi = -a, phi + math.pi
    phi = math.remainder(phi, 2 * math.pi)
    tau = 1.0 / rate if rate > 0 else float('inf')
    tau_err = float(err[1]) / rate ** 2 if rate > 0 else float('inf')
    params = {'amplitude': a, 'rate': rate, 'tau': tau, 'frequency': f, 'phase': phi, 'offset': c}
    errors = {'amplitude': float(err[0]), 'rate': float(err[1]), 'tau': tau_err,
              'frequency': float(err[2]), 'phase': float(err[3]), 'offset': float(err[4])}
    return FitResult(name, params, errors, float(np.linalg.norm(res.fun)), True, res.message)


def _exp_residual(p, x, y):
    return p[0] * np.exp(-x * np.exp(-p[1])) + p[2] - y


def _exp_jac(p, x, y):
    rate = math.exp(-p[1])
    e = np.exp(-x * rate)
    out = np.empty((x.size, 3))
    out[:, 0] = e
    out[:, 1] = p[0] * e * x * rate
    out[:, 2] = 1.0
    return out


def fit_exponential(trace, seed=0):
    """Fit A exp(-x/T) + c with T = exp(u) > 0."""
    name = 'exponential'
    x, y = _xy(trace)
    if x.size < 5:
        return _failed(name, 'need at least 5 points, got {}'.format(x.size))
    if not (np.all(np.isfinite(x)) and np.all(np.isfinite(y))):
        return _failed(name, 'trace has non-finite values')
    if _is_flat(y):
        return _failed(name, 'zero amplitude, decay time unidentifiable')
    order = np.argsort(x)
    x, y = x[order], y[order]
    span = x[-1] - x[0]
    if span <= 0:
        return _failed(name, 'x values do not span an interval')

    c0 = float(y[-1])
    a0 = float(y[0] - y[-1])
    target = c0 + a0 / math.e
    crossed = np.nonzero(np.sign(y - target) != np.sign(y[0] - target))[0]
    t0 = float(x[crossed[0]] - x[0]) if crossed.size else span / 3.0
    t0 = max(t0, span / (10.0 * x.size))
    p0 = np.array([a0 * math.exp(x[0] / t0), math.log(t0), c0])

    rng = np.random.default_rng(seed)
    attempts = [p0] + [p0 + np.array([0, rng.uniform(-1.0, 1.0), 0]) for _ in range(RESTARTS)]
    bounds = ([-np.inf, -50.0, -np.inf], [np.inf, 50.0, np.inf])
    res = _best_of(attempts, _exp_residual, _exp_jac, bounds, x, y)
    if res is None or not res.success:
        return _failed(name, 'least squares did not converge' if res is None else res.message)
    cov = _covariance(res, x.size)
    if cov is None:
        return _failed(name, 'covariance could not be estimated')
    a, u, c = (float(v) for v in res.x)
    err = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    if a == 0 or err[0] > abs(a):
        return _failed(name, 'amplitude not significant, decay time unidentifiable')
    t = math.exp(u)
    params = {'amplitude': a, 'T': t, 'offset': c}
    errors = {'amplitude': float(err[0]), 'T': t * float(err[1]), 'offset': float(err[2])}
    return FitResult(name, params, errors, float(np.linalg.norm(res.fun)), True, res.message)


def fit_sqrt_power(powers, rabi):
    """Least-squares kappa for rabi = kappa * sqrt(power)."""
    p = np.sqrt(np.asarray(powers, dtype=float))
    r = np.asarray(rabi, dtype=float)
    ok = np.isfinite(r)
    p, r = p[ok], r[ok]
    denom = float(p @ p)
    if p.size < 2 or denom == 0:
        return _failed('sqrt_power', 'need at least two powers with fitted Rabi frequencies')
    kappa = float(p @ r) / denom
    resid = r - kappa * p
    dof = max(1, p.size - 1)
    err = math.sqrt(float(resid @ resid) / dof / denom)
    return FitResult('sqrt_power', {'kappa': kappa}, {'kappa': err}, float(np.linalg.norm(resid)), True)


def add_noise(trace, level, rng):
    """Copy of *trace* with Gaussian noise of std ``level * peak-to-peak``."""
    if level < 0:
        raise ValueError('noise level must be >= 0, actual: {!r}'.format(level))
    y = np.asarray(trace.y, dtype=float)
    sigma = level * float(np.ptp(y)) if y.size else 0.0
    noisy = y + rng.normal(0.0, sigma, size=y.shape) if sigma > 0 else y.copy()
    return dataclasses.replace(trace, y=noisy)
