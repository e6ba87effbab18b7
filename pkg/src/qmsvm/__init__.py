"""Multiclass kernel SVM trained through a QUBO formulation.

The Crammer-Singer dual is discretized with a fixed-point binary encoding,
penalized into a QUBO, sampled, and the best samples are blended into one
classifier.
"""

__version__ = "0.1.0"

from ._accel import DEFAULT_BACKEND, HAS_NUMBA
from .data import Dataset, MinMaxScaler, RasterSpec, export_map, load_csv, make_blobs, split
from .errors import (
    ConfigError,
    DataError,
    EnergyMismatchWarning,
    ProtocolError,
    QmsvmError,
    SamplerError,
    TransportError,
)
from .kernel import KernelCounter, KernelParams, kernel, kernel_matrix
from .model import (
    CombineConfig,
    TrainedModel,
    combine,
    load_model,
    predict,
    rank_solutions,
    save_model,
    validation_accuracy,
)
from .pipeline import RunConfig, TrainResult, train
from .qubo import (
    QmsvmParams,
    QuboProblem,
    build_qubo,
    decode_bits,
    load_qubo,
    objective,
    penalty,
)
from .sampler import AnnealConfig, RemoteConfig, SampleSet, solve_exact, solve_remote, solve_sa
from .selection import SelectionConfig, select_kmeans, select_random
