"""Stochastic spiking winner-take-all networks.

``model`` holds the network description and one-round dynamics,
``constructors`` the inhibitor constructions, ``harness`` the trial runner
and estimators, ``oracle`` exact distribution propagation for small ``n``
and ``cli`` the command-line front end.
"""

from .constructors import (
    BUILDERS,
    ConstructionError,
    build_alpha_inhibitor,
    build_logn_inhibitor,
    build_one_inhibitor,
    build_theta_level,
    build_two_inhibitor,
)
from .harness import (
    classify_inhibitors,
    estimate_expected_time,
    estimate_hp_time,
    estimate_stability,
    make_input,
    run_trial,
    simulate_trials,
    wta_predicate,
)
from .model import NetworkSpec, SpecValidationError, sigmoid_prob, step_round, temperature
from .oracle import exact_expected_satisfaction_time, exact_first_satisfaction_cdf

__version__ = "0.1.0"
