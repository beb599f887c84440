from tripletsim import config
from tripletsim import engine
from tripletsim import experiments
from tripletsim import kinetics
from tripletsim import seqlang
from tripletsim import sensitivity
from tripletsim import spin
from tripletsim import support
# NOTE: versions are managed by hatch-vcs; an editable install keeps the
# _version.py generated at install time until the package is rebuilt.
try:
    from tripletsim._version import __version__
except ImportError:
    __version__ = "0.0.0"

load_config = config.load_config
load_profile = config.load_profile
ExperimentConfig = config.ExperimentConfig

Transition = spin.Transition
Sublevel = spin.Sublevel
ZfsParameters = spin.ZfsParameters
MolecularOrientation = spin.MolecularOrientation

KineticRates = kinetics.KineticRates

HybridState = engine.HybridState
MicrowavePulse = engine.MicrowavePulse
DecoherenceParams = engine.DecoherenceParams

parse_sequence = seqlang.parse
print_sequence = seqlang.print_sequence

Trace = experiments.Trace
run_preset = experiments.run_preset
PRESETS = experiments.PRESETS

TripletSimError = support.TripletSimError
SequenceError = support.SequenceError
