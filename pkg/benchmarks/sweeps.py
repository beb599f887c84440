import benchmarks
from tripletsim import config
from tripletsim import experiments

CFG = config.load_profile('crystal')
RAMSEY = CFG.override('experiment', 'ramsey_steps', '21').with_preset('ramsey')
RABI = CFG.override('experiment', 'rabi_steps', '21').with_preset('rabi')


@benchmarks.configure(warm=True, max_iters=20)
def benchmark_rabi_21_points():
    experiments.run_preset(RABI, jobs=1)


@benchmarks.configure(warm=True, max_iters=10)
def benchmark_ramsey_21_points_serial():
    experiments.run_preset(RAMSEY, jobs=1)


@benchmarks.configure(warm=True, max_iters=10)
def benchmark_ramsey_21_points_jobs4():
    experiments.run_preset(RAMSEY, jobs=4)


@benchmarks.configure(max_iters=10)
def benchmark_cw_spectrum():
    experiments.cw_spectrum(CFG)
