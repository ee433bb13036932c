"""Manifest validation against the closed model/dataset lists."""

import pytest

from logit_exporter.manifest import DATASETS, MODELS, ExportManifest


def test_nine_models_two_datasets():
    assert len(MODELS) == 9
    assert DATASETS == ("ImageNet-Val", "ImageNet-V2")


def test_valid_manifest():
    m = ExportManifest("ResNet152", "ImageNet-Val", "z.bin", "y.bin")
    assert m.batch_size == 64
    assert m.sidecar_path.name == "z.meta.json"


def test_unknown_model_rejected():
    with pytest.raises(ValueError):
        ExportManifest("ResNet34", "ImageNet-Val", "z.bin", "y.bin")


def test_unknown_dataset_rejected():
    with pytest.raises(ValueError):
        ExportManifest("ResNet152", "CIFAR10", "z.bin", "y.bin")


def test_output_paths_must_differ():
    with pytest.raises(ValueError):
        ExportManifest("ResNet152", "ImageNet-Val", "same.bin", "same.bin")


def test_batch_size_positive():
    with pytest.raises(ValueError):
        ExportManifest("ResNet152", "ImageNet-Val", "z.bin", "y.bin", batch_size=0)
