"""Two-atom entanglement under driving and stimulated-emission coupling to a Fock mode."""

__version__ = "0.1.0"

from .hilbert import AtomBasisLabel, CouplingParams, ExcitationBlock, block_for, build_block_hamiltonian
from .dynamics import (
    FullSpaceOracle,
    GlobalState,
    XState,
    evolve_block,
    evolve_oracle,
    propagator_analytic,
    reduced_general,
    reduced_xstate_ee,
    reduced_xstate_eg,
    reduced_xstate_gg,
)
from .entanglement import concurrence, concurrence_general, concurrence_x, is_entangled_x, negativity
from .analysis import (
    Engine,
    critical_point,
    lumbar_region,
    period,
    sweep,
    validate_analytic,
    verify_critical,
)

__all__ = [
    "AtomBasisLabel",
    "CouplingParams",
    "Engine",
    "ExcitationBlock",
    "FullSpaceOracle",
    "GlobalState",
    "XState",
    "block_for",
    "build_block_hamiltonian",
    "concurrence",
    "concurrence_general",
    "concurrence_x",
    "critical_point",
    "evolve_block",
    "evolve_oracle",
    "is_entangled_x",
    "lumbar_region",
    "negativity",
    "period",
    "propagator_analytic",
    "reduced_general",
    "reduced_xstate_ee",
    "reduced_xstate_eg",
    "reduced_xstate_gg",
    "sweep",
    "validate_analytic",
    "verify_critical",
]
