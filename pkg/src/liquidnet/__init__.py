"""Continuous-time recurrent networks with biophysical synapse models.

The package implements a family of ODE-defined recurrent networks (neural
ODEs, continuous-time RNNs, and conductance-gated liquid time-constant
cells), integrates them with an unrolled explicit Euler solver, trains them
by reverse-mode differentiation through the unrolled steps, and ships
executable verifiers for the algebraic identities and parameter-packing
arithmetic the model family is built on.
"""

__version__ = "0.1.0"

from .autodiff import Tensor, gradient  # noqa: F401
from .models import (  # noqa: F401
    ModelSpec,
    ParameterSet,
    clamp_params,
    count_params,
    derivative,
    init_params,
    input_map,
    load_checkpoint,
    output_map,
    save_checkpoint,
)
from .solver import Trajectory, default_x0, euler_step, integrate_timestep, rollout  # noqa: F401
from .descriptor import Descriptor, parse, render, to_model_spec  # noqa: F401
from .data import (  # noqa: F401
    Rollout,
    SequenceBatch,
    Split,
    Standardizer,
    gen_synthetic,
    load_rollouts,
    make_windows,
    mnist_sequences,
    read_idx,
    save_rollout_csv,
    split,
    write_idx,
)
from .training import (  # noqa: F401
    AdamState,
    TrainReport,
    TrainResult,
    adam_step,
    cross_entropy_loss,
    evaluate,
    loss_and_gradients,
    mse_loss,
    train,
)
from .analysis import (  # noqa: F401
    check_theorem_1,
    check_theorem_2,
    documented_packing_pairings,
    equivalence_suite,
    family_combinations,
    gradient_check,
    gradient_check_suite,
    linearization_suite,
    linearize_at,
    matching_neural_size,
    packing_report,
    reference_counts,
    run_suite,
    stability_check,
)
