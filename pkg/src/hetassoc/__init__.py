"""Energy-efficient uplink user association for two-tier heterogeneous cellular networks."""

from .association import (Association, DinkelbachTrace, DualTrace, SolverConfig, Strategy,
                          brute_force, dinkelbach_inner, evaluate_whole_ee, solve, solve_amsee,
                          solve_amwee, solve_auf, solve_eeauf, solve_mara)
from .channel import LinkTable, RadioParams, build_link_table, open_loop_power, pathloss_db
from .harness import ExperimentConfig, run_sweep, run_trial
from .metrics import MetricsReport, jain_index, summarize, supported_ratio
from .topology import (DeploymentConfig, PlacementError, Topology, generate_topology,
                       macrocell_region)

__version__ = "0.1.0"
