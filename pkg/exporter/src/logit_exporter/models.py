"""Pretrained model zoo and the fixed evaluation preprocessing."""

from __future__ import annotations

from .errors import ModelLoadFailure

IMAGENET_MEAN = (0.485, 0.456, 0.406)
IMAGENET_STD = (0.229, 0.224, 0.225)

# model name -> (torchvision constructor name, weights attr, resize, crop)
ZOO = {
    "ResNeXT101": ("resnext101_32x8d", "ResNeXt101_32X8D_Weights", 256, 224),
    "ResNet152": ("resnet152", "ResNet152_Weights", 256, 224),
    "ResNet101": ("resnet101", "ResNet101_Weights", 256, 224),
    "ResNet50": ("resnet50", "ResNet50_Weights", 256, 224),
    "ResNet18": ("resnet18", "ResNet18_Weights", 256, 224),
    "DenseNet161": ("densenet161", "DenseNet161_Weights", 256, 224),
    "VGG16": ("vgg16", "VGG16_Weights", 256, 224),
    "ShuffleNet": ("shufflenet_v2_x1_0", "ShuffleNet_V2_X1_0_Weights", 256, 224),
    "Inception": ("inception_v3", "Inception_V3_Weights", 342, 299),
}


def preprocessing_description(model: str) -> str:
    _, _, resize, crop = ZOO[model]
    return (
        f"resize {resize}, center-crop {crop}, scale to [0,1], "
        f"normalize mean={IMAGENET_MEAN} std={IMAGENET_STD}"
    )


def eval_transform(model: str):
    from torchvision import transforms

    _, _, resize, crop = ZOO[model]
    return transforms.Compose(
        [
            transforms.Resize(resize),
            transforms.CenterCrop(crop),
            transforms.ToTensor(),
            transforms.Normalize(IMAGENET_MEAN, IMAGENET_STD),
        ]
    )


def load_model(name: str):
    """Instantiate the pretrained classifier in eval mode on the CPU.

    Uses the original (V1) ImageNet weights so exported accuracies line up
    with the commonly published numbers for these architectures.
    """
    try:
        from torchvision import models as tv_models

        ctor_name, weights_attr, _, _ = ZOO[name]
        weights = getattr(tv_models, weights_attr).IMAGENET1K_V1
        model = getattr(tv_models, ctor_name)(weights=weights)
        model.eval()
        return model
    except Exception as exc:  # weight fetch or constructor failure
        raise ModelLoadFailure(f"could not load {name}: {exc}") from exc
