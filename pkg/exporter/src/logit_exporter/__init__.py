"""Manifest-driven logit exporter for pretrained point-cloud classifiers."""

from .export import ExportError, ExportJob, run_export
from .formats import ExportFormatError, read_cloud, read_manifest, write_logits
from .model import PointNetMini, StubModel, TorchModel, load_model, save_checkpoint

__version__ = "0.1.0"

__all__ = [
    "ExportError",
    "ExportFormatError",
    "ExportJob",
    "PointNetMini",
    "StubModel",
    "TorchModel",
    "load_model",
    "read_cloud",
    "read_manifest",
    "run_export",
    "save_checkpoint",
    "write_logits",
]
