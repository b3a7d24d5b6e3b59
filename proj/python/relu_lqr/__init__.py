"""Policy gradient for scalar discounted LQR with a bias-free ReLU controller."""

from ._core import (
    Error,
    Gains,
    HistoryRow,
    InvalidInputError,
    DegenerateWindowError,
    RiccatiSolution,
    SchemaMismatchError,
    StepRule,
    SystemSpec,
    ThetaNetwork,
    TrainHistory,
    UnstableError,
    UnstableIterateError,
    base_case,
    cost,
    edge_case_network,
    effective_gains,
    grad_mu,
    init_network,
    optimal_cost,
    regime_ledger,
    riccati_solve,
    train,
    value_coeffs,
)

__all__ = [name for name in dir() if not name.startswith("_")]
