"""Collaborative sensing among vehicles in obstructed environments.

Closed-form coverage, redundancy and V2I capacity models, together with
Monte Carlo simulators used to check them.
"""

from .analytics import (DiscModelParams, DiscRoi, DiscStripRoi, expected_coverage_area, expected_void_redundancy,
                        gamma_coverage_approx)
from .freeway_sim import FreewayConfig, generate_freeway, run_experiment
from .geometry import Disc, Omni, PlacedShape, Point2, Rect, Sector, Segment
from .pointprocess import Seed, Window
from .sensing_engine import EnvironmentSnapshot, MarkedObject, SensorMark
from .temporal_dynamics import DynamicConfig, RsuConfig, simulate
from .v2i_capacity import LaneParams, grid_capacity, single_lane_capacity

__version__ = "0.1.0"
