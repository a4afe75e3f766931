from sim.params import ParameterDistribution, ParameterDistributions, PhysicalParams, preset, sample_params
from sim.world import BumperSpec, World, make_world
from sim.pusher import PushEpisode, episode_to_frame, simulate_push

__all__ = [
    "ParameterDistribution",
    "ParameterDistributions",
    "PhysicalParams",
    "preset",
    "sample_params",
    "BumperSpec",
    "World",
    "make_world",
    "PushEpisode",
    "episode_to_frame",
    "simulate_push",
]
