__test__ = False

if __name__ == '__main__':
    import contextlib
    import io
    import os
    import runpy
    import sys

    here = os.path.dirname(os.path.abspath(__file__))
    sys.argv = ['tripletsim', 'validate', os.path.join(here, '..', 'sequences', 'rabi.pseq')]
    out = io.StringIO()
    with contextlib.redirect_stdout(out):
        try:
            runpy.run_module('tripletsim', run_name='__main__')
        except SystemExit as e:
            assert e.code == 0, e.code
    assert out.getvalue().startswith('tone MW freq 1449 rabi 5 pair Tx-Tz\n'), out.getvalue()
    print('pass')
