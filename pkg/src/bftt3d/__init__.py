"""Backpropagation-free test-time adaptation for 3D point clouds."""

from .benchmark import BenchmarkSession, ErrorReport, run_ablation, run_benchmark
from .cloud import SHAPE_KINDS, generate_shape, normalize_unit_sphere
from .config import RunConfig, load_run_config
from .corruptions import CORRUPTION_KINDS, CorruptionSpec, corrupt
from .encoder import EncoderConfig, PointCloudEncoder, channel_embed, encode, encode_many, fps, knn_group, stage_aggregate
from .errors import ConfigError, FormatError, MemoryCorruptionError, NumericError
from .formats import (
    LabeledDataset,
    load_dataset,
    read_cloud,
    read_features,
    read_logits,
    read_manifest,
    write_cloud,
    write_features,
    write_logits,
    write_manifest,
)
from .fusion import FusionConfig, adaptive_weight, bf_logits, fuse, fuse_batch, similarity, softmax, softmax_entropy
from .memory import PrototypeMemory, build_memory, load_memory, save_memory
from .pipeline import SubspaceConfig, TestTimeAdapter
from .source import FileLogitProvider, NearestCentroidSource, fit_centroids, parse_source_spec
from .subspace import (
    IdentityAlignment,
    KernelSpec,
    TransferComponentAnalysis,
    centering_matrix,
    kernel_matrix,
    median_heuristic_bandwidth,
    mmd_distance,
    mmd_scaling_matrix,
)

__version__ = "0.1.0"

__all__ = [
    "BenchmarkSession",
    "CORRUPTION_KINDS",
    "ConfigError",
    "CorruptionSpec",
    "EncoderConfig",
    "ErrorReport",
    "FileLogitProvider",
    "FormatError",
    "FusionConfig",
    "IdentityAlignment",
    "KernelSpec",
    "LabeledDataset",
    "MemoryCorruptionError",
    "NearestCentroidSource",
    "NumericError",
    "PointCloudEncoder",
    "PrototypeMemory",
    "RunConfig",
    "SHAPE_KINDS",
    "SubspaceConfig",
    "TestTimeAdapter",
    "TransferComponentAnalysis",
    "adaptive_weight",
    "bf_logits",
    "build_memory",
    "centering_matrix",
    "channel_embed",
    "corrupt",
    "encode",
    "encode_many",
    "fit_centroids",
    "fps",
    "fuse",
    "fuse_batch",
    "generate_shape",
    "kernel_matrix",
    "knn_group",
    "load_dataset",
    "load_memory",
    "load_run_config",
    "median_heuristic_bandwidth",
    "mmd_distance",
    "mmd_scaling_matrix",
    "normalize_unit_sphere",
    "parse_source_spec",
    "read_cloud",
    "read_features",
    "read_logits",
    "read_manifest",
    "run_ablation",
    "run_benchmark",
    "save_memory",
    "similarity",
    "softmax",
    "softmax_entropy",
    "stage_aggregate",
    "write_cloud",
    "write_features",
    "write_logits",
    "write_manifest",
]
