"""Pilot-wave trajectories for an EPR-Bell experiment with Stern-Gerlach magnets.

Quick tour::

    from bohmbell import default_config, correlation, chsh_M
    E, se = correlation(gamma=0.5, n=500, seed=1)
    est = chsh_M(theta=1.5707963267948966, n_per_setting=500, seed=1)
"""
from .analysis import (
    PALETTE,
    ChshEstimate,
    PairOutcome,
    SeparatrixCurve,
    chsh_M,
    chsh_sweep,
    chsh_theory,
    correlation,
    disk_partition,
    joint_probabilities_theory,
    marginals,
    predicted_outcome,
    readout,
    separatrix,
    simulate_setting,
)
from .config import ConfigError, ExperimentConfig, PhysicalParams, StageSchedule, default_config, load_config, validate
from .batch import PairJob, simulate_jobs
from .guidance import DensityUnderflowError, PairPosition, PairTrajectory, integrate_batch, integrate_pair, integrate_single, velocity
from .sampling import DiskPoint, SeededRng, disk_to_positions, positions_to_disk, sample_disk, sample_pair
from .special import inverse_erf
from .spin import SpinRotation, Spinor2, rotation_y
from .wavefunctions import Stage, StageState, blend_currents, blend_density, stage_currents, stage_density

__version__ = "0.1.0"
