"""Floquet Schrieffer-Wolff transforms for driven lattice models.

Effective Hamiltonians of the driven Hubbard chain with exact-propagation
benchmarks, and screened drive-induced interactions of a two-band
cavity-coupled model on momentum grids.
"""

# Deterministic linear algebra: pin BLAS threading before numpy ever loads.
import os as _os

for _v in ("OPENBLAS_NUM_THREADS", "OMP_NUM_THREADS", "MKL_NUM_THREADS"):
    _os.environ.setdefault(_v, "1")

import importlib as _importlib

__version__ = "0.1.0"

_SUBMODULES = ("errors", "fock", "kernels", "sylvester", "fswt", "dynamics",
               "kspace", "gamma", "cli")

_EXPORTS = {
    # errors
    "FloquetForgeError": "errors", "ConfigError": "errors",
    "PhysicsError": "errors", "ResonantDenominator": "errors",
    "BandResonance": "errors", "NoExciton": "errors",
    "PropagationError": "errors",
    # fock
    "HubbardParams": "fock", "TwoBandChainParams": "fock",
    "SectorBasis": "fock", "build_sector_basis": "fock",
    "SparseOperator": "fock", "TermSum": "fock", "commutator": "fock",
    "build_hubbard_operators": "fock", "build_two_band_chain": "fock",
    # sylvester
    "HarmonicSeries": "sylvester", "MicroMotion": "sylvester",
    "HopExpansionCoeffs": "sylvester", "solve_dense": "sylvester",
    "green_rule_solve": "sylvester", "sylvester_residual": "sylvester",
    "hubbard_micromotion": "sylvester", "solve_order2": "sylvester",
    # fswt
    "hubbard_harmonics": "fswt", "floquet_h2": "fswt", "floquet_h4": "fswt",
    "hfe_h": "fswt", "spin_exchange": "fswt",
    "strong_drive_harmonics": "fswt",
    # dynamics
    "Trajectory": "dynamics", "cdw_state": "dynamics",
    "evolve_exact": "dynamics", "evolve_static": "dynamics",
    "return_rate": "dynamics", "nrmse": "dynamics",
    "return_rate_benchmark": "dynamics", "absorbance_ed": "dynamics",
    # kspace
    "BandGrid": "kspace", "CavitySpec": "kspace", "bare_detuning": "kspace",
    "screened_detuning": "kspace", "bs_detuning": "kspace",
    "exciton_frequency": "kspace", "t_matrix": "kspace",
    "floquet_band": "kspace", "stark_bs_ratio": "kspace",
    "cavity_forward_interaction": "kspace", "pomeranchuk_check": "kspace",
    # gamma
    "InteractionProfile": "gamma", "constant_profile": "gamma",
    "valley_dip_profile": "gamma", "phase_winding_profile": "gamma",
    "GammaMatrix": "gamma", "gamma_matrix": "gamma",
    "mf_gamma_matrix": "gamma", "series_vs_inverse": "gamma",
    "eigen_sign_analysis": "gamma", "mf_screened_denominator": "gamma",
    "scattering_strength": "gamma", "interaction_weight": "gamma",
    "cavity_global_interaction": "gamma", "coulomb_mix_selfenergy": "gamma",
}

__all__ = ["__version__"] + list(_SUBMODULES) + sorted(_EXPORTS)


def __getattr__(name):
    if name in _SUBMODULES:
        return _importlib.import_module(f".{name}", __name__)
    if name in _EXPORTS:
        module = _importlib.import_module(f".{_EXPORTS[name]}", __name__)
        return getattr(module, name)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(__all__)
