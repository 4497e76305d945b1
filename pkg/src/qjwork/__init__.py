"""Quantum-jump work statistics of a resonantly driven qubit in a thermal bath.

Energies are in units of the qubit splitting and times in inverse qubit
frequency.  Work is an integer number of quanta.
"""
from .cayley import (CayleyResult, cayley_statistics, combined_moment_ratio,
                     perturbative_statistics, reverse_identity_check)
from .engine import StepTooLarge, mean_excited_population, run_trajectory
from .master import ReducedDensityMatrix, integrate_master
from .model import DriveProtocol, ModelParams, PureState
from .rng import RngStream
from .stats import EnsembleSummary, WorkHistogram, histogram, summarize
from .work import WorkEnsemble, measure_by_guardian, run_protocol_ensemble

__all__ = [
    "CayleyResult", "DriveProtocol", "EnsembleSummary", "ModelParams", "PureState",
    "ReducedDensityMatrix", "RngStream", "StepTooLarge", "WorkEnsemble", "WorkHistogram",
    "cayley_statistics", "combined_moment_ratio", "histogram", "integrate_master",
    "mean_excited_population", "measure_by_guardian", "perturbative_statistics",
    "reverse_identity_check", "run_protocol_ensemble", "run_trajectory", "summarize",
]
