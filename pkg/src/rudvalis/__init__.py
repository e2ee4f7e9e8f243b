"""Lower-bound machinery for the Rudvalis shuffle and two of its variants.

Submodules:

* :mod:`rudvalis.shuffles` -- decks, moves, shuffle distributions, lifted stepping
* :mod:`rudvalis.spectral` -- eigenfunctions of the lifted single-card walk
* :mod:`rudvalis.bounds` -- the eigenfunction lower bound and its constants
* :mod:`rudvalis.exact` -- exact distribution evolution for small decks
* :mod:`rudvalis.montecarlo` -- seeded simulation at larger deck sizes
* :mod:`rudvalis.cli` -- command line front end
"""

from rudvalis.errors import (
    CapExceededError,
    LemmaInapplicableError,
    RudvalisError,
    SolverError,
    ValidationError,
)
from rudvalis.shuffles import (
    CardPhase,
    LiftedState,
    Move,
    ShuffleSpec,
    apply_move,
    card_phase_update,
    step_lifted,
)
from rudvalis.spectral import (
    EigenSystem,
    build_twisted_matrix,
    psi_eval,
    psi_max,
    r_bound,
    solve,
    solve_rudvalis,
    solve_shift_or_swap,
    solve_symmetrized,
    verify_eigensystem,
)
from rudvalis.bounds import BoundReport, lower_bound_time, theorem_constants

__version__ = "0.1.0"

__all__ = [
    "BoundReport",
    "CapExceededError",
    "CardPhase",
    "EigenSystem",
    "LemmaInapplicableError",
    "LiftedState",
    "Move",
    "RudvalisError",
    "ShuffleSpec",
    "SolverError",
    "ValidationError",
    "apply_move",
    "build_twisted_matrix",
    "card_phase_update",
    "lower_bound_time",
    "psi_eval",
    "psi_max",
    "r_bound",
    "solve",
    "solve_rudvalis",
    "solve_shift_or_swap",
    "solve_symmetrized",
    "step_lifted",
    "theorem_constants",
    "verify_eigensystem",
]
