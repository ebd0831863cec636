"""Measurement-device-independent verification of quantum memories."""

from .bsm import bsm_povm, lambda_from_visibility, payoff
from .channels import (Channel, choi, depolarizing, from_chi, identity, intercept_resend,
                       is_entanglement_breaking)
from .game import Tally, WitnessResult, exact_witness, simulate_rounds, witness_estimate
from .kernels import BACKEND
from .predict import MemoryParams, noise_strength, storage_efficiency, theory_curve

__version__ = "0.1.0"
