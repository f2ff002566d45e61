"""Lazy peeling simulations of random planar maps with heavy-tailed faces.

The package builds the critical weight sequence for a tail exponent
a in (3/2, 5/2) \\ {2}, samples the associated peeling processes (plain
peel-by-step, metric layers, Eden first-passage growth), and checks the
Monte Carlo output against closed-form and quadrature oracles.
"""

from .model import (
    ModelParams,
    Phase,
    char_fn,
    check_criticality,
    derived_constants,
    disk_partition,
    e_dfpp_formula,
    h_down,
    h_up,
    make_special_model,
    nu_pmf,
    nu_tail_neg,
    nu_tail_pos,
    w_hat,
    weight,
)
from .sampler import PeelEvent, make_rng, peel_step_finite, peel_step_infinite, sample_nu
from .peel import (
    BudgetError,
    PeelState,
    RunRecord,
    boltzmann_volume,
    dyadic_checkpoints,
    exact_mean_volume,
    run_peel,
)
from .layers import (
    LayerRecord,
    LayerState,
    height_growth_check,
    kernel_mass_check,
    layer_step,
    run_layers,
)
from .eden import (
    DfppEstimate,
    EdenRecord,
    EdenState,
    dyadic_time_grid,
    eden_step,
    estimate_dfpp,
    run_eden_dilute,
    standardized_increments,
)
from .oracle import (
    QuadratureError,
    ReturnProbTable,
    build_return_table,
    e_dfpp_closed,
    exp_inv_P,
    return_prob_convolution,
    return_prob_quadrature,
    return_prob_sum_tail,
    tutte_enumerate,
)

__version__ = "0.1.0"

__all__ = [
    "BudgetError",
    "DfppEstimate",
    "EdenRecord",
    "EdenState",
    "LayerRecord",
    "LayerState",
    "ModelParams",
    "PeelEvent",
    "PeelState",
    "Phase",
    "QuadratureError",
    "ReturnProbTable",
    "RunRecord",
    "boltzmann_volume",
    "build_return_table",
    "char_fn",
    "check_criticality",
    "derived_constants",
    "disk_partition",
    "dyadic_checkpoints",
    "dyadic_time_grid",
    "e_dfpp_closed",
    "e_dfpp_formula",
    "eden_step",
    "estimate_dfpp",
    "exact_mean_volume",
    "exp_inv_P",
    "h_down",
    "h_up",
    "height_growth_check",
    "kernel_mass_check",
    "layer_step",
    "make_rng",
    "make_special_model",
    "nu_pmf",
    "nu_tail_neg",
    "nu_tail_pos",
    "peel_step_finite",
    "peel_step_infinite",
    "return_prob_convolution",
    "return_prob_quadrature",
    "return_prob_sum_tail",
    "run_eden_dilute",
    "run_layers",
    "run_peel",
    "sample_nu",
    "standardized_increments",
    "tutte_enumerate",
    "w_hat",
    "weight",
]
