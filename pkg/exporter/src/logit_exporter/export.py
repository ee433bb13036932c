"""Batched inference over a test set, written out as CPLT/CPLB files.

The export is deterministic: no shuffling, eval mode, fixed preprocessing,
float32 logits straight from the classifier head (no temperature, no
softmax). A JSON sidecar records the model, dataset, shapes, top-1 accuracy
of the exported logits, and the preprocessing description.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from .errors import MissingDataset
from .manifest import ExportManifest
from .models import eval_transform, load_model, preprocessing_description
from .writers import write_label_file, write_logit_file


def _numeric_class_order(names: list[str]) -> bool:
    return all(name.isdigit() for name in names)


def open_dataset(manifest: ExportManifest):
    """ImageFolder over the manifest's data root with eval preprocessing.

    ImageNet-V2 ships class directories named "0".."999"; those are mapped
    by numeric value, not lexicographic order, so label ids match the
    ImageNet class index.
    """
    if manifest.data_root is None or not Path(manifest.data_root).is_dir():
        raise MissingDataset(
            f"{manifest.dataset} not found at {manifest.data_root!r}; pass --data-root"
        )
    from torchvision import datasets

    class _Folder(datasets.ImageFolder):
        def find_classes(self, directory):
            classes, class_to_idx = super().find_classes(directory)
            if _numeric_class_order(classes):
                classes = sorted(classes, key=int)
                class_to_idx = {name: int(name) for name in classes}
            return classes, class_to_idx

    return _Folder(manifest.data_root, transform=eval_transform(manifest.model))


def run_inference(model, dataset, batch_size: int) -> tuple[np.ndarray, np.ndarray]:
    """Forward the whole dataset; returns (float32 logits, int labels)."""
    import torch
    from torch.utils.data import DataLoader

    loader = DataLoader(dataset, batch_size=batch_size, shuffle=False, num_workers=0)
    chunks, labels = [], []
    with torch.no_grad():
        for images, targets in loader:
            logits = model(images)
            chunks.append(logits.detach().cpu().to(torch.float32).numpy())
            labels.append(np.asarray(targets, dtype=np.int64))
    if not chunks:
        raise MissingDataset("dataset yielded no examples")
    return np.concatenate(chunks, axis=0), np.concatenate(labels, axis=0)


def export(
    manifest: ExportManifest,
    model=None,
    dataset=None,
) -> dict:
    """Run one export job and return the sidecar record.

    ``model`` and ``dataset`` may be injected (any callable batch->logits
    module and any (image, label) dataset); by default they come from the
    manifest's pretrained zoo entry and image folder.
    """
    # resolve the dataset before touching model weights: a missing data
    # root should fail fast, not after a multi-hundred-MB weight fetch
    if dataset is None:
        dataset = open_dataset(manifest)
    if model is None:
        model = load_model(manifest.model)
    logits, labels = run_inference(model, dataset, manifest.batch_size)
    n, k = logits.shape
    write_logit_file(manifest.out_logits, logits)
    write_label_file(manifest.out_labels, labels, k)
    accuracy = float((logits.argmax(axis=1) == labels).mean())
    record = {
        "model": manifest.model,
        "dataset": manifest.dataset,
        "n": int(n),
        "k": int(k),
        "accuracy": accuracy,
        "preprocessing": preprocessing_description(manifest.model),
        "out_logits": str(manifest.out_logits),
        "out_labels": str(manifest.out_labels),
    }
    manifest.sidecar_path.write_text(json.dumps(record, indent=2) + "\n")
    return record
