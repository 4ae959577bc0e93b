"""Penultimate-layer embedder around a pretrained image classifier."""

from __future__ import annotations

from pathlib import Path

import numpy as np
import torch
from PIL import Image
from torchvision import transforms
from torchvision.models import alexnet

EMBEDDING_DIM = 4096

# Canonical ImageNet preprocessing for the backbone.
_PREPROCESS = transforms.Compose(
    [
        transforms.Resize(256),
        transforms.CenterCrop(224),
        transforms.ToTensor(),
        transforms.Normalize(mean=[0.485, 0.456, 0.406], std=[0.229, 0.224, 0.225]),
    ]
)


class PenultimateEmbedder:
    """4096-d embeddings from the layer before the classification head.

    weights: "pretrained" downloads/loads the ImageNet checkpoint, a
    path loads a state dict, and None builds a seeded random-init model
    (deterministic, for offline runs and tests).
    """

    def __init__(self, weights: str | Path | None = "pretrained", seed: int = 0):
        torch.set_num_threads(max(1, torch.get_num_threads()))
        if weights == "pretrained":
            from torchvision.models import AlexNet_Weights

            model = alexnet(weights=AlexNet_Weights.IMAGENET1K_V1)
        elif weights is None:
            torch.manual_seed(seed)
            model = alexnet(weights=None)
        else:
            model = alexnet(weights=None)
            state = torch.load(weights, map_location="cpu", weights_only=True)
            model.load_state_dict(state)
        # drop the final classification layer; keep dropout/linear/relu
        model.classifier = torch.nn.Sequential(*list(model.classifier.children())[:-1])
        model.eval()
        self.model = model

    def embed_batch(self, images: list[Image.Image]) -> np.ndarray:
        """Embed RGB images; rows align with the input order."""
        batch = torch.stack([_PREPROCESS(img) for img in images])
        with torch.no_grad():
            out = self.model(batch)
        vectors = out.numpy().astype(np.float32)
        if vectors.shape[1] != EMBEDDING_DIM:
            raise RuntimeError(f"unexpected embedding width {vectors.shape[1]}")
        return vectors
