"""Run independent sweep points concurrently, returning results in sweep order.

Points are dispatched by an :class:`eventlet.GreenPool`; the numerical work of
each point runs in eventlet's native thread pool through
:func:`eventlet.tpool.execute` so the hub stays responsive. With ``jobs=1``
everything runs inline in the calling thread.
"""
import logging
import traceback

import eventlet
from eventlet import tpool

from tripletsim import config

__all__ = ['SweepPool', 'DEBUG']

# print tracebacks of failing points, see tripletsim.debug.sweep_exceptions()
DEBUG = False

log = logging.getLogger('tripletsim.sweeppool')


class SweepPool:
    """Ordered map over sweep points with at most *jobs* in flight."""

    def __init__(self, jobs=None):
        if jobs is None:
            jobs = config.default_jobs()
        if jobs < 1:
            raise ValueError('jobs must be >= 1, actual: {!r}'.format(jobs))
        self.jobs = int(jobs)

    def _call(self, func, index, item):
        try:
            if self.jobs == 1:
                return func(item)
            return tpool.execute(func, item)
        except Exception:
            if DEBUG:
                traceback.print_exc()
            log.debug('sweep point %d failed', index)
            raise

    def map(self, func, items):
        """List of ``func(item)`` in the order of *items*."""
        items = list(items)
        if self.jobs == 1 or len(items) < 2:
            return [self._call(func, i, item) for i, item in enumerate(items)]
        pool = eventlet.GreenPool(self.jobs)
        return list(pool.imap(lambda job: self._call(func, *job), enumerate(items)))

    def __repr__(self):
        return '<SweepPool jobs={}>'.format(self.jobs)
