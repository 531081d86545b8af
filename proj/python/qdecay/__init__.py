"""s-wave nonescape probability P(t) and its long-time power laws."""

from ._core import (
    ConfigError,
    DegenerateCombination,
    DegenerateState,
    DomainError,
    GaussianBump,
    IncompleteBasis,
    NotBracketed,
    NumericalError,
    Potential,
    QuadratureBudget,
    RadialGrid,
    SineBox,
    __version__,
    build_delta_shell,
    build_initial_state,
    decay_curve,
    decompose,
    dump_config,
    engineer_vanishing_moment,
    find_bound_states,
    find_resonance_poles,
    find_zero_energy_coupling,
    fit_exponent,
    jost,
    jost_at_zero,
    nonescape,
    parse_config,
    project_out_bound_states,
    propagate_grid,
    propagate_spectral,
    run_command,
)

__all__ = [name for name in dir() if not name.startswith("_")] + ["__version__"]
