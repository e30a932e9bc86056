"""Energy-preserving full-order and reduced-order models for multi-symplectic PDEs.

Finite-difference full-order models of KdV, NLS (1D and 2D) and
Zakharov-Kuznetsov, integrated with the average vector field method, plus
POD-Galerkin reduced models with optional DEIM hyper-reduction.
"""

from .avf import AvfConfig, FactorizationError, ImplicitSkewSystem, StepFailure, avf_average, avf_step
from .deim import DeimError, DeimOperator, build_deim_operator, compute_deim, qdeim_select
from .fom import EnergyTrace, Trajectory, assemble_snapshots, collect_nonlinear_snapshots, run_fom
from .metrics import ErrorReport, e_energy, e_shape, e_sol
from .models import MODELS, KdV, NLS1D, NLS2D, ZK, discrete_energy
from .msrm import read_msrm, write_msrm
from .operators import Grid, build_2d_diffs, build_centered_diff
from .pipeline import REFERENCE_CASES, RunConfig, run_case
from .pod import PodBasis, compute_pod, cross_mass, lift, project, reduce_operator
from .rom import P_ROM, PD_ROM, build_reduced_system, reduced_energy, run_rom

__version__ = "0.1.0"
