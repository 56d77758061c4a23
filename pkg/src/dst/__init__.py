"""Analysis, optimal design, and simulation of distributed system throttlers.

A throttler network is a connected weighted graph of rate-limiting
servers that exchange a local performance measure and diffuse their
request limits toward consensus while conserving the global limit.  This
package provides:

* ``graph`` / ``spectral``: weighted graphs, Laplacian spectra (cyclic
  Jacobi), pseudoinverses, effective resistance;
* ``measures``: convergence factor and steady-state dispersion, with an
  independent Lyapunov-equation cross-check;
* ``design``: optimal update cycle and optimal link weights (fastest and
  most robust network) by first-order convex methods;
* ``dynamics``: seeded discrete-time simulation of the four nodal
  measures with over-throttling accounting;
* ``allocation``: per-server client splits (proportional and
  waterfilling);
* ``cli``: the ``dst`` command.

Hot kernels are numba-jitted with a pure-numpy fallback; set
``DST_NUMBA=0`` to force the fallback.
"""

from .allocation import (
    Allocation,
    ClientDemands,
    proportional_split,
    slack_recurrence_level,
    water_level,
    waterfill_split,
)
from .design import (
    BacktrackingStep,
    DesignResult,
    DiminishingStep,
    FixedStep,
    SolverConfig,
    dispersion_weight_gradient,
    fastest_weights,
    optimal_gamma_nonsteady,
    optimal_gamma_steady,
    robust_weights,
)
from .dynamics import (
    DstScenario,
    LoadModel,
    Trajectory,
    generate_load,
    load_scenario,
    make_rng,
    over_throttling_pct,
    scenario_from_dict,
    simulate,
    step_case1,
    step_case2,
    step_case3,
    step_case4,
)
from .errors import (
    CaseDomainViolationError,
    DisconnectedError,
    DstError,
    DuplicateEdgeError,
    GraphError,
    InfeasibleStartError,
    NoConvergenceError,
    NoInteriorOptimumError,
    NonpositiveWeightError,
    NumericalBlowupError,
    SameNodeError,
    ScenarioError,
    SelfLoopError,
    SingularError,
    UnstableError,
    ZeroIdealError,
)
from .graph import (
    WeightedGraph,
    build_graph,
    complete_graph,
    cycle_graph,
    laplacian,
    path_graph,
    read_graph,
    star_graph,
    write_graph,
)
from .kernels import backend_name
from .measures import (
    INFINITE,
    MeasureReport,
    NoiseModel,
    convergence_factor,
    dispersion_centrality,
    iid_dispersion,
    is_convergent,
    is_infinite,
    lyapunov_dispersion,
    lyapunov_gramian,
    measure_report,
    resistance_limit,
    steady_state_dispersion,
    total_mismatch_loss,
)
from .spectral import (
    SpectralData,
    effective_resistance,
    graph_spectrum,
    pseudoinverse,
    shifted_pseudoinverse,
    spectrum,
    total_effective_resistance,
)

__version__ = "0.1.0"
