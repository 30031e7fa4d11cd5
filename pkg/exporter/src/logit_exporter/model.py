"""Reference point-cloud classifier and the constant-output test stub.

The classifier is a small PointNet-style network: a shared per-point MLP
followed by a global max pool and a linear head.  Checkpoints are plain
torch files carrying the state dict plus the architecture fields, so a
file path fully identifies a model.
"""

from __future__ import annotations

import hashlib
from pathlib import Path

import numpy as np
import torch
from torch import nn


class PointNetMini(nn.Module):
    """Shared per-point MLP (3 -> width -> 2*width), max pool, linear head."""

    def __init__(self, n_classes: int, width: int = 64):
        super().__init__()
        self.n_classes = n_classes
        self.width = width
        self.point_mlp = nn.Sequential(
            nn.Conv1d(3, width, 1),
            nn.ReLU(),
            nn.Conv1d(width, 2 * width, 1),
            nn.ReLU(),
        )
        self.head = nn.Sequential(
            nn.Linear(2 * width, width),
            nn.ReLU(),
            nn.Linear(width, n_classes),
        )

    def forward(self, clouds: torch.Tensor) -> torch.Tensor:
        # clouds: (batch, N, 3) -> logits (batch, C)
        x = self.point_mlp(clouds.transpose(1, 2))
        return self.head(x.max(dim=2).values)


class StubModel:
    """Constant-output stand-in; every sample gets the same logit row."""

    def __init__(self, n_classes: int):
        self.n_classes = n_classes
        self.row = np.arange(n_classes, dtype=np.float32) * 0.1

    def predict_batch(self, clouds: np.ndarray) -> np.ndarray:
        return np.tile(self.row, (len(clouds), 1))


class TorchModel:
    """Checkpoint-backed classifier running batched inference."""

    def __init__(self, checkpoint_path, device: str = "cpu"):
        payload = torch.load(checkpoint_path, map_location=device, weights_only=True)
        try:
            n_classes = int(payload["n_classes"])
            width = int(payload["width"])
            state = payload["state_dict"]
        except (KeyError, TypeError) as exc:
            raise ValueError(f"{checkpoint_path}: not an exporter checkpoint: {exc}") from exc
        self.net = PointNetMini(n_classes, width).to(device)
        self.net.load_state_dict(state)
        self.net.eval()
        self.device = device
        self.n_classes = n_classes

    @torch.no_grad()
    def predict_batch(self, clouds: np.ndarray) -> np.ndarray:
        batch = torch.from_numpy(np.ascontiguousarray(clouds, dtype=np.float32)).to(self.device)
        return self.net(batch).cpu().numpy()


def save_checkpoint(net: PointNetMini, path) -> None:
    torch.save(
        {"state_dict": net.state_dict(), "n_classes": net.n_classes, "width": net.width},
        path,
    )


def file_checksum(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def load_model(identifier: str, device: str = "cpu"):
    """Resolve a model identifier.

    ``stub:<C>`` gives the constant-output stub; anything else is a
    checkpoint path.  Returns (model, checksum-string).
    """
    if identifier.startswith("stub:"):
        n_classes = int(identifier.split(":", 1)[1])
        if n_classes < 1:
            raise ValueError("stub model needs at least one class")
        return StubModel(n_classes), "stub"
    return TorchModel(identifier, device), file_checksum(identifier)
