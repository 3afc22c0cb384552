"""Qudit unitary synthesis into GCX/GCZ circuits with an exact gate-count model."""

from .circuit import Circuit, QuditSpec, count_gates, evaluate_circuit, phase_distance
from .cost import CostParams, lower_bound, model_gcx_count
from .numerics import haar_random_unitary
from .synth import SynthesisOptions, synthesize

__all__ = [
    "Circuit",
    "CostParams",
    "QuditSpec",
    "SynthesisOptions",
    "count_gates",
    "evaluate_circuit",
    "haar_random_unitary",
    "lower_bound",
    "model_gcx_count",
    "phase_distance",
    "synthesize",
]
