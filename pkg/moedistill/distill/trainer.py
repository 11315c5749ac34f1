"""Seeded training loops: teacher fine-tuning and student distillation."""

import dataclasses
import logging

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill.distill import losses
from moedistill.distill import optim
from moedistill import exception
from moedistill.model import encoder
from moedistill import utils

logger = logging.getLogger(__name__)

TEACHER = "teacher"
FINETUNE = "finetune"
STUDENT = "student"


@dataclasses.dataclass
class TrainConfig(object):
    lr: float = 1e-3
    batch_size: int = 32
    epochs: int = 10
    weight_decay: float = 0.0
    grad_clip_norm: float = 1.0
    seed: int = 0

    def validate(self):
        if self.lr <= 0 or self.batch_size < 1 or self.epochs < 0:
            raise exception.InvalidRunConfig(
                message="lr, batch_size and epochs must be positive")
        if self.weight_decay < 0:
            raise exception.InvalidRunConfig(
                message="weight_decay must be non-negative")


@dataclasses.dataclass
class DistillConfig(TrainConfig):
    lambda_distill: float = 1.0
    layer_set: str = losses.ALL

    def validate(self):
        super(DistillConfig, self).validate()
        if self.lambda_distill < 0:
            raise exception.InvalidRunConfig(
                message="lambda_distill must be non-negative")
        if self.layer_set not in losses.LAYER_SETS:
            raise exception.InvalidChoice(field="layer_set",
                                          value=self.layer_set,
                                          choices=", ".join(losses.LAYER_SETS))


def evaluate(model, data, batch_size=64):
    """Accuracy and mean cross-entropy of `model` on `data`, dropout off."""
    if not len(data):
        raise exception.EmptyDataset()
    correct = 0
    loss = 0.0
    with tensor.no_grad():
        for batch in data.batches(batch_size):
            logits, _ = model(batch.token_ids, batch.mask)
            correct += int((logits.data.argmax(axis=1) ==
                            batch.labels).sum())
            loss += F.cross_entropy(logits, batch.labels,
                                    reduction="sum").item()
    return {"accuracy": correct / float(len(data)),
            "loss": loss / len(data),
            "examples": len(data)}


class Trainer(object):
    """Adam + global-norm clipping over shuffled mini-batches.

    Without a teacher the objective is the task cross-entropy; with one it
    is ``CE + lambda * (L_trm + L_pred)``.  Shuffling and dropout draw from
    their own streams of the configured seed, so a run is reproducible.
    """

    def __init__(self, model, config, phase, teacher=None, metrics=None):
        config.validate()
        self.model = model
        self.config = config
        self.phase = phase
        self.teacher = teacher
        self.metrics = metrics
        self.optimizer = optim.Adam(model.parameters(), lr=config.lr,
                                    weight_decay=config.weight_decay)
        self.steps = 0

    def _step(self, batch, dropout_rng):
        logits, layers = self.model(batch.token_ids, batch.mask, dropout_rng)
        if self.teacher is None:
            ce = F.cross_entropy(logits, batch.labels)
            loss = losses.DistillBatchLoss(ce.item(), 0.0, 0.0, ce)
        else:
            with tensor.no_grad():
                t_logits, t_layers = self.teacher(batch.token_ids, batch.mask)
            loss = losses.batch_loss(
                logits, layers, t_logits, t_layers, batch.labels, batch.mask,
                self.config.lambda_distill, self.config.layer_set)
        params = self.model.parameters()
        tensor.backward(loss.total, leaves=params)
        optim.clip_grad_norm(params, self.config.grad_clip_norm)
        self.optimizer.step()
        self.steps += 1
        return loss

    def fit(self, train, evaluation=None):
        """Train for the configured epochs; returns per-epoch records."""
        if not len(train):
            raise exception.EmptyDataset()
        shuffle_rng = utils.rng(self.config.seed, 10)
        dropout_rng = utils.rng(self.config.seed, 11)
        history = []
        for epoch in range(1, self.config.epochs + 1):
            sums = np.zeros(4)
            count = 0
            last = (float("nan"),) * 3
            for batch in train.batches(self.config.batch_size, shuffle_rng):
                try:
                    loss = self._step(batch, dropout_rng)
                except exception.NonFiniteValue:
                    raise exception.TrainingDiverged(
                        phase=self.phase, epoch=epoch, step=self.steps + 1,
                        ce=last[0], trm=last[1], pred=last[2])
                last = (loss.ce, loss.trm, loss.pred)
                sums += (loss.ce, loss.trm, loss.pred, loss.value)
                count += 1
            ce, trm, pred, total = (sums / count).tolist()
            record = {"phase": self.phase, "epoch": epoch,
                      "step": self.steps, "ce": ce, "trm": trm,
                      "pred": pred, "total": total, "eval_acc": None}
            if evaluation is not None and len(evaluation):
                record["eval_acc"] = evaluate(self.model,
                                              evaluation)["accuracy"]
            logger.info("[%s] epoch %d: ce=%.4f trm=%.4f pred=%.4f "
                        "total=%.4f eval_acc=%s", self.phase, epoch, ce, trm,
                        pred, total, record["eval_acc"])
            if self.metrics is not None:
                self.metrics.write(record)
            history.append(record)
        return history


def train_teacher(model_config, config, train, evaluation=None,
                  metrics=None):
    """Fine-tune a freshly initialized dense encoder with cross-entropy."""
    if model_config.moe is not None:
        raise exception.InvalidModelConfig(
            reason="the teacher must be a dense model")
    model = encoder.EncoderModel(model_config, seed=config.seed)
    history = Trainer(model, config, TEACHER, metrics=metrics).fit(
        train, evaluation)
    return model, history


def finetune(model, config, train, evaluation=None, metrics=None):
    """Cross-entropy-only training of an existing model, in place."""
    history = Trainer(model, config, FINETUNE, metrics=metrics).fit(
        train, evaluation)
    return model, history


def train_student(student, teacher, config, train, evaluation=None,
                  metrics=None):
    """Distill `teacher` into `student` in place; the teacher is frozen."""
    history = Trainer(student, config, STUDENT, teacher=teacher,
                      metrics=metrics).fit(train, evaluation)
    return student, history
