"""Active distribution learning against a counted invalidity oracle.

Library layout:

- ``core``: points, finite-support distributions, bounded losses, counted
  oracles, and the statistical verification/amplification helpers;
- ``families``: finite families, box distributions, exact constrained
  minimizers, L1 covers, and the n-gram demo model;
- ``learners``: the round-based improper learner, the importance-weighted
  elimination learner, and the proper box learner;
- ``lowerbound``: adversarial hidden-box and needle instances with query
  accounting;
- ``harness``: scenario library, configs, seeded multi-trial runs, CLI.
"""

from ._accel import BACKEND as KERNEL_BACKEND
from .core import (
    DiscreteDistribution,
    GridInvalidityOracle,
    InvalidityOracle,
    LossFunction,
    TableInvalidityOracle,
    VectorRuleOracle,
    VerificationReport,
    amplify,
    empirical_loss,
    invalidity,
    invalidity_under_rule,
    loss_eval,
    true_loss,
    verify_candidate,
)
from .errors import (
    AmplificationExhausted,
    ConfigError,
    NoCandidateSurvived,
    NoFeasibleDistribution,
    ValidgenError,
)
from .families import (
    BoxDistribution,
    BoxFamily,
    FiniteFamily,
    NgramModel,
    gmn_oracle_box,
    gmn_oracle_finite,
    greedy_l1_cover,
    l1_distance,
    ngram_gmn_greedy,
)
from .learners import (
    FilteredMeta,
    LearnerOutcome,
    LearnerParams,
    MuPrime,
    filtered_density,
    filtered_sample,
    mu_prime_accept_prob,
    partial_validity_learn,
    proper_box_learn,
    vgm_learn,
)
from .lowerbound import (
    HiddenBoxInstance,
    NeedleInstance,
    PackingResult,
    SearchReport,
    evaluate_box_candidate,
    gv_packing,
    make_hidden_box_instance,
    make_needle_instance,
    proper_search_demo,
)

__version__ = "0.1.0"

__all__ = [
    "AmplificationExhausted",
    "BoxDistribution",
    "BoxFamily",
    "ConfigError",
    "DiscreteDistribution",
    "FilteredMeta",
    "FiniteFamily",
    "GridInvalidityOracle",
    "HiddenBoxInstance",
    "InvalidityOracle",
    "KERNEL_BACKEND",
    "LearnerOutcome",
    "LearnerParams",
    "LossFunction",
    "MuPrime",
    "NeedleInstance",
    "NgramModel",
    "NoCandidateSurvived",
    "NoFeasibleDistribution",
    "PackingResult",
    "SearchReport",
    "TableInvalidityOracle",
    "ValidgenError",
    "VectorRuleOracle",
    "VerificationReport",
    "amplify",
    "empirical_loss",
    "evaluate_box_candidate",
    "filtered_density",
    "filtered_sample",
    "gmn_oracle_box",
    "gmn_oracle_finite",
    "greedy_l1_cover",
    "gv_packing",
    "invalidity",
    "invalidity_under_rule",
    "l1_distance",
    "loss_eval",
    "make_hidden_box_instance",
    "make_needle_instance",
    "mu_prime_accept_prob",
    "ngram_gmn_greedy",
    "partial_validity_learn",
    "proper_box_learn",
    "proper_search_demo",
    "true_loss",
    "verify_candidate",
    "vgm_learn",
]
