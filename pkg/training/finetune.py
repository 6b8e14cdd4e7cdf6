"""
training/finetune.py
The fine-tuning loop shared by every strategy.

Per epoch:
  1. seeded shuffle of the training set
  2. per cloud: augment → (resample) → FPS + grouping + kNN graph
  3. per batch: forward → cross-entropy → backward → AdamW at cosine_lr(epoch)
  4. test accuracy on batches prepared once (no augmentation, FPS from index 0)

Every random draw comes from its own (seed, label, counter) stream so a run is
reproducible from its seed alone.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import pandas as pd

from config import LR_MAX, LR_MIN, WEIGHT_DECAY
from errors import ConfigError, DataError
from geometry.neighbors import PreparedBatch, prepare_cloud, stack_prepared
from geometry.pointcloud import CloudDataset, PointCloud, augment, resample_points
from numerics.autodiff import backward
from numerics.rng import RngStream
from training.loss import cross_entropy
from training.model import StagClassifier
from training.optim import AdamState, adamw_step, zero_grads
from training.schedule import cosine_lr

logger = logging.getLogger(__name__)

METRIC_COLUMNS = ["epoch", "lr", "train_loss", "train_acc", "test_acc", "epoch_time_s"]


@dataclass
class TrainConfig:
    strategy: str = "stag_std"
    epochs: int = 100
    batch_size: int = 16
    lr_max: float = LR_MAX
    lr_min: float = LR_MIN
    weight_decay: float = WEIGHT_DECAY
    seed: int = 1
    num_points: Optional[int] = None
    deterministic: bool = True

    def __post_init__(self):
        if self.epochs < 0:
            raise ConfigError(f"epochs must be ≥ 0, got {self.epochs}")
        if self.batch_size < 1:
            raise ConfigError(f"batch_size must be ≥ 1, got {self.batch_size}")


@dataclass
class TrainResult:
    metrics: pd.DataFrame
    timings: pd.DataFrame
    final_test_acc: float
    tunable_groups: list[str] = field(default_factory=list)
    tunable_count: int = 0


# ---------------------------------------------------------------------------
# Batch preparation
# ---------------------------------------------------------------------------

def _prepare(
    model: StagClassifier,
    cloud: PointCloud,
    num_points: Optional[int],
    fps_rng: Optional[RngStream],
    resample_rng: RngStream,
):
    cfg = model.backbone.config
    points = cloud.points
    if num_points is not None:
        points = resample_points(points, num_points, resample_rng)
    return prepare_cloud(points, cfg.n, cfg.group_size, model.graph_k, fps_rng)


def eval_batches(
    model: StagClassifier,
    dataset: CloudDataset,
    batch_size: int,
    num_points: Optional[int] = None,
) -> list[tuple[PreparedBatch, np.ndarray]]:
    """Test-time batches: no augmentation, deterministic FPS, fixed resampling stream."""
    prepared = [
        _prepare(model, cloud, num_points, None, RngStream(0, "eval/resample", i))
        for i, cloud in enumerate(dataset.clouds)
    ]
    labels = dataset.labels
    return [
        (stack_prepared(prepared[i:i + batch_size]), labels[i:i + batch_size])
        for i in range(0, len(prepared), batch_size)
    ]


def evaluate(
    model: StagClassifier,
    dataset: CloudDataset,
    batch_size: int = 16,
    num_points: Optional[int] = None,
    batches: Optional[list[tuple[PreparedBatch, np.ndarray]]] = None,
) -> float:
    """Accuracy on a dataset, no dropout and no augmentation."""
    if len(dataset) == 0:
        raise DataError("cannot evaluate on an empty dataset")
    if batches is None:
        batches = eval_batches(model, dataset, batch_size, num_points)
    correct = 0
    for batch, labels in batches:
        correct += int((model.predict(batch) == labels).sum())
    return correct / len(dataset)


# ---------------------------------------------------------------------------
# Training loop
# ---------------------------------------------------------------------------

def _train_epoch(
    model: StagClassifier,
    train: CloudDataset,
    cfg: TrainConfig,
    epoch: int,
    lr: float,
    state: AdamState,
) -> tuple[float, float]:
    params = model.tunable_params()
    size = len(train)
    order = RngStream(cfg.seed, "shuffle", epoch).generator().permutation(size)
    labels = train.labels

    loss_sum, correct = 0.0, 0
    for b, start in enumerate(range(0, size, cfg.batch_size)):
        idx = order[start:start + cfg.batch_size]
        prepared = []
        for i in idx:
            counter = epoch * size + int(i)
            cloud = augment(train.clouds[i], RngStream(cfg.seed, "augment", counter))
            prepared.append(_prepare(
                model, cloud, cfg.num_points,
                RngStream(cfg.seed, "fps", counter),
                RngStream(cfg.seed, "resample", counter),
            ))
        batch = stack_prepared(prepared)
        batch_labels = labels[idx]

        logits = model.forward(batch, dropout_rng=RngStream(cfg.seed, f"dropout/e{epoch}", b))
        loss = cross_entropy(logits, batch_labels)
        zero_grads(params)
        backward(loss)
        adamw_step(params, state, lr, cfg.weight_decay)

        loss_sum += float(loss.value) * len(idx)
        correct += int((np.argmax(logits.value, axis=1) == batch_labels).sum())
        logger.debug("[TRAIN] epoch %d batch %d | loss=%.4f", epoch, b, float(loss.value))
    return loss_sum / size, correct / size


def finetune(
    train: CloudDataset,
    test: CloudDataset,
    model: StagClassifier,
    cfg: TrainConfig,
) -> TrainResult:
    """
    Train the model's tunable set for cfg.epochs epochs and record one metrics
    row per epoch. With epochs=0 the metrics are empty and the parameters are
    left as initialised.
    """
    if len(train) == 0:
        raise DataError("training set is empty")
    if len(test) == 0:
        raise DataError("test set is empty")
    if cfg.strategy != model.strategy:
        raise ConfigError(f"train config strategy {cfg.strategy} does not match model strategy {model.strategy}")

    logger.info(
        "[TRAIN] strategy=%s seed=%d | %d train / %d test clouds | %d tunable parameters in %d groups",
        cfg.strategy, cfg.seed, len(train), len(test), model.tunable_count(), len(model.tunable_groups()),
    )

    test_batches = eval_batches(model, test, cfg.batch_size, cfg.num_points)
    state = AdamState()
    rows, timing_rows = [], []
    test_acc = evaluate(model, test, batches=test_batches)
    last = max(cfg.epochs - 1, 0)

    for epoch in range(cfg.epochs):
        started = time.perf_counter()
        lr = cosine_lr(epoch, last, cfg.lr_max, cfg.lr_min)
        train_loss, train_acc = _train_epoch(model, train, cfg, epoch, lr, state)
        test_acc = evaluate(model, test, batches=test_batches)
        elapsed = time.perf_counter() - started

        rows.append({
            "epoch": epoch,
            "lr": lr,
            "train_loss": train_loss,
            "train_acc": train_acc,
            "test_acc": test_acc,
            "epoch_time_s": 0.0 if cfg.deterministic else elapsed,
        })
        timing_rows.append({"epoch": epoch, "epoch_time_s": elapsed})
        logger.info(
            "[TRAIN] seed=%d epoch %3d/%d | lr=%.3e loss=%.4f train_acc=%.3f test_acc=%.3f (%.2fs)",
            cfg.seed, epoch + 1, cfg.epochs, lr, train_loss, train_acc, test_acc, elapsed,
        )

    return TrainResult(
        metrics=pd.DataFrame(rows, columns=METRIC_COLUMNS),
        timings=pd.DataFrame(timing_rows, columns=["epoch", "epoch_time_s"]),
        final_test_acc=test_acc,
        tunable_groups=model.tunable_groups(),
        tunable_count=model.tunable_count(),
    )
