"""Export manifest: which model, which test set, where the files go."""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

MODELS = (
    "ResNeXT101",
    "ResNet152",
    "ResNet101",
    "ResNet50",
    "ResNet18",
    "DenseNet161",
    "VGG16",
    "ShuffleNet",
    "Inception",
)

DATASETS = ("ImageNet-Val", "ImageNet-V2")


@dataclass(frozen=True)
class ExportManifest:
    """One export job; names come from the closed model/dataset lists."""

    model: str
    dataset: str
    out_logits: str
    out_labels: str
    batch_size: int = 64
    data_root: str | None = None

    def __post_init__(self) -> None:
        if self.model not in MODELS:
            raise ValueError(f"model must be one of {MODELS}, got {self.model!r}")
        if self.dataset not in DATASETS:
            raise ValueError(f"dataset must be one of {DATASETS}, got {self.dataset!r}")
        if Path(self.out_logits).resolve() == Path(self.out_labels).resolve():
            raise ValueError("out_logits and out_labels must be distinct paths")
        if self.batch_size < 1:
            raise ValueError(f"batch_size must be positive, got {self.batch_size}")

    @property
    def sidecar_path(self) -> Path:
        return Path(self.out_logits).with_suffix(".meta.json")
