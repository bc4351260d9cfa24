"""Embedding extractor registry.

Each spec names a pretrained convolutional network, the square input size it
expects, the layer the embedding is read from, and the length of the
flattened output. The ResNet family and ResNeXt read the global average-pool
output (the last layer before classification); VGG16 reads the final
max-pooling output (512x7x7, flattened); NASNet-A reads the pooled features
ahead of its classifier and needs the optional ``pretrainedmodels`` backend.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import torch
from torch import nn


class SetupError(RuntimeError):
    """A required backend or checkpoint is unavailable; message says how to fix it."""


@dataclass(frozen=True)
class ExtractorSpec:
    name: str
    input_size: int
    output_dim: int
    layer: str
    mean: tuple[float, float, float]
    std: tuple[float, float, float]
    weights_file: str
    weights_url: str


_IMAGENET_MEAN = (0.485, 0.456, 0.406)
_IMAGENET_STD = (0.229, 0.224, 0.225)

SPECS: dict[str, ExtractorSpec] = {
    "resnet18": ExtractorSpec(
        name="resnet18", input_size=224, output_dim=512, layer="avgpool",
        mean=_IMAGENET_MEAN, std=_IMAGENET_STD,
        weights_file="resnet18-f37072fd.pth",
        weights_url="https://download.pytorch.org/models/resnet18-f37072fd.pth",
    ),
    "resnet152": ExtractorSpec(
        name="resnet152", input_size=224, output_dim=2048, layer="avgpool",
        mean=_IMAGENET_MEAN, std=_IMAGENET_STD,
        weights_file="resnet152-394f9c45.pth",
        weights_url="https://download.pytorch.org/models/resnet152-394f9c45.pth",
    ),
    "resnext": ExtractorSpec(
        name="resnext", input_size=224, output_dim=2048, layer="avgpool",
        mean=_IMAGENET_MEAN, std=_IMAGENET_STD,
        weights_file="resnext101_64x4d-173b62eb.pth",
        weights_url="https://download.pytorch.org/models/resnext101_64x4d-173b62eb.pth",
    ),
    "nasnet_a": ExtractorSpec(
        name="nasnet_a", input_size=331, output_dim=4032, layer="avg_pool",
        mean=(0.5, 0.5, 0.5), std=(0.5, 0.5, 0.5),
        weights_file="nasnetalarge-a1897284.pth",
        weights_url="http://data.lip6.fr/cadene/pretrainedmodels/nasnetalarge-a1897284.pth",
    ),
    "vgg16": ExtractorSpec(
        name="vgg16", input_size=224, output_dim=25088, layer="features",
        mean=_IMAGENET_MEAN, std=_IMAGENET_STD,
        weights_file="vgg16-397923af.pth",
        weights_url="https://download.pytorch.org/models/vgg16-397923af.pth",
    ),
}


def get_spec(name: str) -> ExtractorSpec:
    if name not in SPECS:
        raise SetupError(f"unknown extractor {name!r}; choose from {sorted(SPECS)}")
    return SPECS[name]


class _Flattened(nn.Module):
    def __init__(self, body):
        super().__init__()
        self.body = body

    def forward(self, x):
        return torch.flatten(self.body(x), 1)


def _build_full(spec: ExtractorSpec) -> nn.Module:
    """The complete architecture, classifier included (checkpoint-compatible)."""
    from torchvision import models

    if spec.name == "resnet18":
        return models.resnet18(weights=None)
    if spec.name == "resnet152":
        return models.resnet152(weights=None)
    if spec.name == "resnext":
        return models.resnext101_64x4d(weights=None)
    if spec.name == "vgg16":
        return models.vgg16(weights=None)
    if spec.name == "nasnet_a":
        try:
            import pretrainedmodels
        except ImportError:
            raise SetupError(
                "nasnet_a needs the 'pretrainedmodels' package, which is not "
                "installed (pip install pretrainedmodels); its checkpoint is "
                f"published at {spec.weights_url}"
            ) from None
        return pretrainedmodels.nasnetalarge(num_classes=1001, pretrained=False)
    raise SetupError(f"no builder for {spec.name!r}")


def _truncate(spec: ExtractorSpec, net: nn.Module) -> nn.Module:
    """Cut the classifier off so the forward pass ends at the embedding layer."""
    if spec.name in ("resnet18", "resnet152", "resnext"):
        net.fc = nn.Identity()
        return _Flattened(net)
    if spec.name == "vgg16":
        return _Flattened(net.features)
    if spec.name == "nasnet_a":
        net.last_linear = nn.Identity()
        return _Flattened(net)
    raise SetupError(f"no truncation rule for {spec.name!r}")


def build_extractor(spec: ExtractorSpec, weights_dir=None, untrained: bool = False) -> nn.Module:
    """Instantiate the embedding network in eval mode.

    With ``untrained=True`` the architecture gets a fixed-seed random
    initialization (for format/dimension checks without checkpoints).
    Otherwise the checkpoint is loaded from ``weights_dir/<weights_file>``
    into the full architecture before truncation; a missing file raises
    SetupError carrying the download URL.
    """
    torch.manual_seed(0)
    net = _build_full(spec)
    if not untrained:
        if weights_dir is None:
            raise SetupError(
                f"no weights directory given for {spec.name}; download "
                f"{spec.weights_url} and pass the directory containing "
                f"{spec.weights_file} (or run with untrained weights for smoke tests)"
            )
        path = Path(weights_dir) / spec.weights_file
        if not path.exists():
            raise SetupError(
                f"checkpoint {path} not found; download it from {spec.weights_url}"
            )
        state = torch.load(path, map_location="cpu", weights_only=True)
        net.load_state_dict(state)
    model = _truncate(spec, net)
    model.eval()
    return model
