"""Shared machinery for the epoch-based trainers (DCCA, DGCCA).

Every epoch is one seeded shuffle of the train split walked in batches;
after each epoch the dev split is scored and the best snapshot (first
occurrence on ties) is the one that survives.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class EpochRecord:
    epoch: int
    objective: float
    scores: dict[str, float]
    aggregate: float


@dataclass
class TrainLog:
    epochs: list[EpochRecord] = field(default_factory=list)
    selected_epoch: int = -1
    warnings: list[str] = field(default_factory=list)

    def record(self, epoch: int, objective: float, scores: dict[str, float]) -> float:
        aggregate = max(scores.values())
        self.epochs.append(EpochRecord(epoch, objective, dict(scores), aggregate))
        return aggregate

    def to_dict(self) -> dict:
        return {
            "epochs": [
                {
                    "epoch": e.epoch,
                    "objective": e.objective,
                    "dev_scores": e.scores,
                    "aggregate": e.aggregate,
                }
                for e in self.epochs
            ],
            "selected_epoch": self.selected_epoch,
            "warnings": list(self.warnings),
        }


def clamp_batch_size(batch_size: int, n_train: int, log: TrainLog) -> int:
    if batch_size > n_train:
        log.warnings.append(
            f"batch size {batch_size} exceeds train size {n_train}; clamped"
        )
        return n_train
    return batch_size


def iter_batches(n: int, batch_size: int, rng: np.random.Generator):
    """Seeded shuffle of range(n), yielded in batch_size chunks."""
    perm = rng.permutation(n)
    for lo in range(0, n, batch_size):
        yield perm[lo : lo + batch_size]


def snapshot_params(nets) -> list[dict]:
    return [{k: v.copy() for k, v in net.params().items()} for net in nets]


def restore_params(nets, snapshot: list[dict]) -> None:
    for net, params in zip(nets, snapshot):
        if params:
            net.set_params({k: v.copy() for k, v in params.items()})
