"""Orlicz-Sobolev N-functions, cut-off modified nonlinearities, a numerical
mountain-pass solver and a-posteriori Moser-ladder bounds."""
from .cutoff import CutoffFamily, eval_cutoff, verify_cutoff
from .energy import Problem
from .field import DiscreteField, Grid, luxemburg_norm, orlicz_sobolev_norm
from .moser import (norm_envelope_bound, moser_ladder, scalar_linf_bound,
                    valley_scaling_maximizer)
from .mpa import SolverConfig, initial_valley_point, mountain_pass, run_mountain_pass
from .nfunction import (GrowthKernel, IndexPair, NFunction, build_from_kernel, complement,
                        estimate_indices, power_nfunction, sobolev_conjugate)
from .nonlinearity import NonlinearitySpec, check_hypotheses

__all__ = [
    "CutoffFamily", "eval_cutoff", "verify_cutoff", "Problem", "DiscreteField", "Grid",
    "luxemburg_norm", "orlicz_sobolev_norm", "norm_envelope_bound", "moser_ladder",
    "scalar_linf_bound", "valley_scaling_maximizer", "SolverConfig", "initial_valley_point",
    "mountain_pass", "run_mountain_pass", "GrowthKernel", "IndexPair", "NFunction",
    "build_from_kernel", "complement", "estimate_indices", "power_nfunction",
    "sobolev_conjugate", "NonlinearitySpec", "check_hypotheses",
]
