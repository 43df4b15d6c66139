"""Cyclically monotone multi-output regression via exact optimal transport."""

from ._core import (
    BrenierModel,
    OtSolution,
    SimModel,
    accuracy,
    barycentric_predict_train,
    brute_force_monge,
    calibration_map_grid,
    check_cyclic_monotone,
    check_weak_iop,
    classwise_ce,
    confidence_ce,
    fit,
    fit_recalibrator,
    fit_sim,
    l1_calibration_error,
    load_brenier_model,
    load_sim_model,
    outer_objective,
    pav_fit,
    project_row_to_simplex,
    recalibrate,
    recover_vertex_plan,
    save_model,
    save_sim_model,
    sim_objective,
    solve_discrete_ot,
    squared_l2_cost,
    __version__,
)

__all__ = [
    "BrenierModel",
    "OtSolution",
    "SimModel",
    "accuracy",
    "barycentric_predict_train",
    "brute_force_monge",
    "calibration_map_grid",
    "check_cyclic_monotone",
    "check_weak_iop",
    "classwise_ce",
    "confidence_ce",
    "fit",
    "fit_recalibrator",
    "fit_sim",
    "l1_calibration_error",
    "load_brenier_model",
    "load_sim_model",
    "outer_objective",
    "pav_fit",
    "project_row_to_simplex",
    "recalibrate",
    "recover_vertex_plan",
    "save_model",
    "save_sim_model",
    "sim_objective",
    "solve_discrete_ot",
    "squared_l2_cost",
    "__version__",
]
