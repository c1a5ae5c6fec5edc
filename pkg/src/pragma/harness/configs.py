"""Training configuration with per-(model, domain) hyperparameter defaults."""

from __future__ import annotations

import subprocess
from dataclasses import dataclass

from .. import __version__
from ..listener import ListenerConfig
from ..speaker import SegmenterConfig, SpeakerConfig

# (role, domain) -> (dropout rate, hidden dim, attention dim)
DEFAULT_HPARAMS = {
    ("listener", "sail"): (0.25, 100, 100),
    ("listener", "alchemy"): (0.1, 50, 50),
    ("listener", "scene"): (0.1, 100, 100),
    ("listener", "tangrams"): (0.3, 50, 100),
    ("speaker", "sail"): (0.25, 100, 100),
    ("speaker", "alchemy"): (0.3, 100, None),
    ("speaker", "scene"): (0.3, 100, None),
    ("speaker", "tangrams"): (0.3, 50, None),
}

ROLES = ("listener", "speaker", "segmenter")


@dataclass
class TrainConfig:
    domain: str
    role: str
    seed: int = 0
    epochs: int = 100
    patience: int = 5
    lr: float = 1e-3
    grad_clip: float = 5.0
    # None picks the published per-domain defaults
    dropout: float | None = None
    hidden_dim: int | None = None
    attn_dim: int | None = None
    emb_dim: int | None = None     # None: same as hidden (embedding sizes unpublished)
    eval_beam: int = 1             # greedy dev decoding for early stopping
    train_path: str | None = None
    dev_path: str | None = None

    def __post_init__(self):
        if self.role not in ROLES:
            raise ValueError(f"unknown role {self.role!r}")
        if self.dropout is not None and not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        for name in ("hidden_dim", "attn_dim", "emb_dim"):
            v = getattr(self, name)
            if v is not None and v <= 0:
                raise ValueError(f"{name} must be positive")

    def resolved(self) -> "TrainConfig":
        defaults = DEFAULT_HPARAMS.get((self.role, self.domain),
                                       DEFAULT_HPARAMS.get(("listener", self.domain),
                                                           (0.25, 50, 50)))
        drop, hidden, attn = defaults
        out = TrainConfig(**{**self.__dict__})
        out.dropout = self.dropout if self.dropout is not None else drop
        out.hidden_dim = self.hidden_dim or hidden
        out.attn_dim = self.attn_dim or (attn or out.hidden_dim)
        out.emb_dim = self.emb_dim or out.hidden_dim
        return out

    def listener_config(self) -> ListenerConfig:
        r = self.resolved()
        return ListenerConfig(emb_dim=r.emb_dim, hidden_dim=r.hidden_dim,
                              attn_dim=r.attn_dim, dropout=r.dropout)

    def speaker_config(self) -> SpeakerConfig:
        r = self.resolved()
        return SpeakerConfig(emb_dim=r.emb_dim, hidden_dim=r.hidden_dim,
                             attn_dim=r.attn_dim, dropout=r.dropout)

    def segmenter_config(self) -> SegmenterConfig:
        r = self.resolved()
        return SegmenterConfig(hidden_dim=r.hidden_dim, dropout=r.dropout)

    def to_json(self) -> dict:
        return dict(self.__dict__)

    @classmethod
    def from_json(cls, obj: dict) -> "TrainConfig":
        return cls(**obj)


def version_string() -> str:
    try:
        sha = subprocess.run(["git", "rev-parse", "--short", "HEAD"],
                             capture_output=True, text=True, timeout=5)
        if sha.returncode == 0:
            return f"pragma-{__version__}+g{sha.stdout.strip()}"
    except (OSError, subprocess.TimeoutExpired):
        pass
    return f"pragma-{__version__}"
