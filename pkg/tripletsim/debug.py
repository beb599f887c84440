"""Toggles for diagnosing simulations."""

__all__ = ['hard_pulse_warnings', 'sweep_exceptions', 'clear_caches', 'format_cache_info']


def hard_pulse_warnings(state=True):
    """Toggles whether pulses on a poorly resolved transition emit
    :class:`tripletsim.support.HardPulseWarning`."""
    from tripletsim import engine
    engine.WARN_HARD_PULSE = state


def sweep_exceptions(state=True):
    """Toggles whether the sweep pool prints tracebacks of failing points,
    in addition to raising them like it normally does."""
    from tripletsim import sweeppool
    sweeppool.DEBUG = state


def format_cache_info():
    """Returns a formatted string of the propagator cache statistics.
    Useful to check that a sweep reuses its laser and readout propagators."""
    from tripletsim import kinetics
    result = []
    for fn in (kinetics.propagator, kinetics.integrated_propagator):
        result.append('{}: {}'.format(fn.__name__, fn.cache_info()))
    return '\n'.join(result)


def clear_caches():
    from tripletsim import engine, kinetics
    kinetics.propagator.cache_clear()
    kinetics.integrated_propagator.cache_clear()
    engine.dephasing_rates.cache_clear()
