"""Streaming Oja subspace estimation (C++ core)."""

from ._ojastream import (
    CovSpec,
    N_o_formula,
    Normalizer,
    OjaError,
    OjaState,
    Schedule,
    chart,
    draw_samples,
    init_state,
    make_spec,
    minimax_lower_bound,
    offline_pca,
    phi,
    phi_gap_free,
    principal_angles,
    run,
    run_experiment,
    sin_theta,
    step,
    tan_theta,
)

__all__ = [name for name in dir() if not name.startswith("_")]
