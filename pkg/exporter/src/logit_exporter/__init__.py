"""Export pretrained image-classifier logits in the CPLT/CPLB binary format."""

from .errors import ExporterError, MissingDataset, ModelLoadFailure
from .export import export, run_inference
from .manifest import DATASETS, MODELS, ExportManifest
from .writers import write_label_file, write_logit_file

__version__ = "0.1.0"

__all__ = [
    "DATASETS",
    "MODELS",
    "ExportManifest",
    "ExporterError",
    "MissingDataset",
    "ModelLoadFailure",
    "export",
    "run_inference",
    "write_label_file",
    "write_logit_file",
]
