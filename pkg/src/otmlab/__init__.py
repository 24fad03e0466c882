"""otmlab: one-time memories over simulated isolated qubits.

Building blocks: GF(2) linear algebra (gf2), the q-ary symmetric channel
(channel), a capacity-approaching concatenated code (code), exact product-
state qubit simulation (qsim), the one-time-memory device (otm), adaptive
single-qubit adversaries (adversary), and exact entropy/bound analysis
(analysis).  The otmlab CLI wraps seed-deterministic experiments.
"""

from .adversary import (
    Action,
    DeviceView,
    Record,
    SeparablePovmElement,
    StopImmediately,
    Strategy,
    Transcript,
    breidbart,
    fictional_adversary,
    greedy_basis_guess,
    measure_all,
    per_block_random_basis,
    run,
)
from .analysis import (
    EnumerationLimits,
    JointDistribution,
    SecurityBoundParams,
    SecurityBoundResult,
    UncertaintyBoundParams,
    UncertaintyBoundResult,
    chain_rule_check,
    exact_joint_distribution,
    fictional_equivalence_check,
    maassen_uffink_check,
    min_entropy,
    otm_security_bound,
    smooth_min_entropy,
    uncertainty_relation_bound,
)
from .channel import ChannelParams, capacity, corrupt, otm_error_probability, transmit
from .code import (
    CodeParams,
    ConcatenatedCode,
    DecodeResult,
    GenericLinearCode,
    build_code,
    derive_params,
    load_bundle,
    rate,
    save_bundle,
)
from .gf2 import (
    BitMatrix,
    BitVector,
    SolveResult,
    independent_column_subset,
    load_matrix,
    random_matrix,
    random_vector,
    rank,
    save_matrix,
    solve,
    vec_mat_mul,
)
from .otm import (
    OtmDevice,
    ReadoutChoice,
    fast_honest_read,
    honest_read,
    program,
    select,
    snapshot,
)
from .qsim import (
    HADAMARD,
    STANDARD,
    Instrument,
    ProductState,
    Qubit,
    basis_instrument,
    measure,
    outcome_probabilities,
    prepare_conjugate,
)
from .seeding import master_rng, trial_rng

__version__ = "0.1.0"
