"""Variational quantum-neural hybrid eigensolver with built-in error mitigation.

Subpackages: symbolic Pauli algebra (:mod:`.pauli`), noisy circuit simulation
(:mod:`.simulator`), post-processed energy estimation (:mod:`.estimator`),
classical modules (:mod:`.classical_models`), tri-optimization and retraining
(:mod:`.training`), analytic oracles (:mod:`.oracles`) and the experiment
harness (:mod:`.experiments`).
"""

from .classical_models import PostProcessor
from .estimator import SampleSet, energy_exact, energy_sampled, p_eff
from .pauli import (PauliSum, PauliTerm, TransformSpec, dense, heisenberg,
                    local_transform, swap_half_layer, tfim, transform_hamiltonian)
from .simulator import (AnsatzSpec, Circuit, DensityMatrix, NoiseModel, StateVector,
                        build_circuit, run_density, run_state, sample)
from .training import (TrainConfig, TrainingProblem, TrainState, TransformFamily,
                       biased_retrain, retraining_gain, train, train_noiseless_baseline)

__all__ = [
    "AnsatzSpec", "Circuit", "DensityMatrix", "NoiseModel", "PauliSum", "PauliTerm",
    "PostProcessor", "SampleSet", "StateVector", "TrainConfig", "TrainState",
    "TrainingProblem", "TransformFamily", "TransformSpec", "biased_retrain",
    "build_circuit", "dense", "energy_exact", "energy_sampled", "heisenberg",
    "local_transform", "p_eff", "retraining_gain", "run_density", "run_state",
    "sample", "swap_half_layer", "tfim", "train", "train_noiseless_baseline",
    "transform_hamiltonian",
]

__version__ = "0.1.0"
