"""Quantum neural network surrogates for noisy black-box functions, with a classical baseline."""
__version__ = "0.1.0"

from .ann import MlpConfig, MlpModel, mlp_fit, mlp_forward, mlp_predict_many
from .circuit import AnsatzSchedule, QnnArchitecture, assemble_qnn
from .data import Dataset, NoiseSpec, add_output_noise, grid_sample, load_csv_dataset
from .hardware import (HardwareProfile, gate_budget, get_profile, required_two_qubit_error,
                       survival_rate, survival_table)
from .metrics import SweepCell, r2_score, run_sweep
from .optimize import OptResult, adam_minimize, cobyla_minimize
from .qnn import SurrogateModel, TrainConfig, fit, load_model, predict, predict_many, save_model
