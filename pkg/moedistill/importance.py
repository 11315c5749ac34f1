"""
First-order neuron importance of the dense FFN layers.

The score of neuron j (column j of W1, row j of W2) is the sum over the
dataset of the absolute first-order loss change from removing it::

    I_j = sum_(x, y) |w1_j . dL/dw1_j + w2_j . dL/dw2_j|

Gradients are taken one example at a time so that the absolute value
stays inside the sum.
"""

import json
import logging

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill.data import dataset as dataset_
from moedistill import exception
from moedistill import utils

logger = logging.getLogger(__name__)


def rank_neurons(scores):
    """Neuron indices by descending score, ties by ascending index."""
    return np.argsort(-np.asarray(scores, dtype=np.float64), kind="stable")


class ImportanceTable(object):
    def __init__(self, scores, dataset_size=None):
        self.scores = dict((int(layer), np.asarray(s, dtype=np.float64))
                           for layer, s in scores.items())
        self.dataset_size = dataset_size

    @property
    def layers(self):
        return sorted(self.scores)

    @property
    def ordering(self):
        return dict((layer, rank_neurons(s))
                    for layer, s in self.scores.items())

    def to_json(self):
        return dict((str(layer), self.scores[layer].tolist())
                    for layer in self.layers)

    @classmethod
    def from_json(cls, doc):
        return cls(dict((int(k), v) for k, v in doc.items()))

    def digest(self):
        return utils.sha256(self.to_json())

    def save(self, path):
        with open(path, "w") as f:
            json.dump(self.to_json(), f, sort_keys=True)

    @classmethod
    def load(cls, path):
        with open(path) as f:
            return cls.from_json(json.load(f))

    def __add__(self, other):
        sizes = (self.dataset_size, other.dataset_size)
        return ImportanceTable(
            dict((layer, self.scores[layer] + other.scores[layer])
                 for layer in self.layers),
            None if None in sizes else sum(sizes))


def _check_teacher(teacher, data):
    if teacher.is_moe:
        raise exception.AlreadyAdapted()
    if not len(data):
        raise exception.EmptyDataset()


def accumulate_importance(teacher, data, loss_fn=None):
    """Score every FFN neuron of `teacher` over the examples of `data`.

    `loss_fn(logits, labels)` defaults to the task cross-entropy.  Dropout
    is off.
    """
    _check_teacher(teacher, data)
    loss_fn = loss_fn or F.cross_entropy
    layers = range(teacher.config.layers)
    ffns = [teacher.ffn(i) for i in layers]
    leaves = [t for w1, _, w2, _ in ffns for t in (w1, w2)]
    scores = dict((i, np.zeros(teacher.config.ffn_hidden)) for i in layers)

    for n, example in enumerate(data):
        batch = dataset_.collate([example])
        logits, _ = teacher(batch.token_ids, batch.mask)
        tensor.backward(loss_fn(logits, batch.labels), leaves=leaves)
        for i, (w1, _, w2, _) in zip(layers, ffns):
            first = (w1.data * w1.grad).sum(axis=0)
            second = (w2.data * w2.grad).sum(axis=1)
            scores[i] += np.abs(first + second)
        if (n + 1) % 500 == 0:
            logger.debug("Scored %d/%d examples", n + 1, len(data))

    teacher.zero_grad()
    logger.info("Accumulated importance over %d examples, %d layers",
                len(data), len(scores))
    return ImportanceTable(scores, dataset_size=len(data))


def ablate_neurons(model, layer, neurons):
    """Copy of `model` with the given neurons of `layer` removed."""
    ablated = model.copy()
    w1, b1, w2, _ = ablated.ffn(layer)
    size = b1.size
    for j in np.atleast_1d(neurons):
        if not 0 <= j < size:
            raise exception.NeuronOutOfRange(j=int(j), size=size)
    w1.data[:, neurons] = 0.0
    b1.data[neurons] = 0.0
    w2.data[neurons, :] = 0.0
    return ablated


def example_losses(model, data, batch_size=64):
    """Cross-entropy of every example, in dataset order, without a graph."""
    losses = []
    with tensor.no_grad():
        for batch in data.batches(batch_size):
            logits, _ = model(batch.token_ids, batch.mask)
            logp = F.log_softmax(logits).data
            losses.append(-logp[np.arange(len(batch)), batch.labels])
    return np.concatenate(losses)


def importance_oracle(teacher, data, layer, j, reduction="total"):
    """Exact loss change from removing neuron `j` of `layer`.

    ``reduction="total"`` compares total losses; ``"per_example"`` sums the
    absolute change of every example's loss.
    """
    _check_teacher(teacher, data)
    with_neuron = example_losses(teacher, data)
    without = example_losses(ablate_neurons(teacher, layer, j), data)
    if reduction == "total":
        return float(abs(with_neuron.sum() - without.sum()))
    if reduction == "per_example":
        return float(np.abs(with_neuron - without).sum())
    raise exception.InvalidChoice(field="reduction", value=reduction,
                                  choices="total, per_example")
