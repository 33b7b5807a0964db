"""Coherence of quantum channels: Choi-matrix toolkit, superchannels and SDP-based measures."""
from .channels import Channel, ChannelState, PureChannel
from .config import DEFAULT, Tolerances
from .errors import SolverError, ValidationError
from .measures import c_max, c_r, d_max
from .superchannels import Instrument, Povm, SubSuperchannel, Superchannel

__version__ = "0.1.0"

__all__ = [
    "Channel",
    "ChannelState",
    "PureChannel",
    "Superchannel",
    "SubSuperchannel",
    "Instrument",
    "Povm",
    "Tolerances",
    "DEFAULT",
    "ValidationError",
    "SolverError",
    "c_max",
    "c_r",
    "d_max",
]
