"""Towers, stacks, cyclic stacks and Rohlin partitions for the shift automorphism."""

from .cyclic import CyclicStack, MatrixUnits, build_cyclic_stack, cyclic_stack_length
from .model import StackModel, as_dense
from .partition import (
    RohlinPartition,
    RohlinReport,
    asymptotic_commutation_check,
    choose_parameters,
    refine_to_rohlin_partition,
    rohlin_pipeline,
    verify_rohlin_partition,
)
from .stack import (
    Pairing,
    StackData,
    collapse_stack,
    model_shape_from_tower,
    model_stack,
    pair_sets,
    stack_from_tower,
    verify_stack,
)
from .tower import Tower, build_tower, fixed_class_candidates, select_subclopen_with_class, verify_tower

__all__ = [
    "CyclicStack", "MatrixUnits", "Pairing", "RohlinPartition", "RohlinReport", "StackData", "StackModel",
    "Tower", "as_dense", "asymptotic_commutation_check", "build_cyclic_stack", "build_tower",
    "choose_parameters", "collapse_stack", "cyclic_stack_length", "fixed_class_candidates",
    "model_shape_from_tower", "model_stack", "pair_sets", "refine_to_rohlin_partition", "rohlin_pipeline",
    "select_subclopen_with_class", "stack_from_tower", "verify_rohlin_partition", "verify_stack", "verify_tower",
]
