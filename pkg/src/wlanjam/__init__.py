"""Sample-level simulator of bistatic OFDM WLAN sensing under deceptive jamming."""
from .waveform import OfdmConfig, SltfGrid, IqPulse, make_sltf_grid, modulate_pulse, demodulate_pulse
from .channel import ChannelModel, Path, NoiseConfig, ScenarioGeometry, GeoTarget
from .jammer import JammerConfig, PhantomTarget, PhantomTrajectory
from .receiver import Rdm, CtfEstimate
from .scenario import ScenarioConfig, load_scenario, default_scenario

__version__ = "0.1.0"
