"""Seeded synthetic sentence classification task.

Every class owns a disjoint set of signal tokens.  A sentence is a run of
Zipf-distributed background tokens shared by all classes with a few
signal tokens of its class inserted at random positions, so the label is
recoverable from token identity alone.
"""

import logging

import numpy as np

from moedistill.data import dataset
from moedistill.data import vocab as vocab_
from moedistill import exception
from moedistill import utils

logger = logging.getLogger(__name__)

ZIPF_EXPONENT = 1.1


def signal_token(label, k):
    return "s%d_%d" % (label, k)


def background_token(rank):
    return "w%d" % rank


def signal_sets(n_classes, signals_per_class):
    return [set(signal_token(c, k) for k in range(signals_per_class))
            for c in range(n_classes)]


def gen_synthetic_task(seed, n_examples, n_classes, vocab_size,
                       signals_per_class=4, length=(8, 24), signals=(2, 4),
                       eval_fraction=0.2):
    """Generate ``(train, eval, corpus)``.

    `vocab_size` counts the reserved tokens; what is left after the signal
    sets goes to background tokens.  `length` bounds the number of
    background tokens and `signals` the number of signal tokens per
    sentence (both inclusive).  Labels are exactly balanced before the
    train/eval split.  `corpus` is the training text.
    """
    if n_classes < 2:
        raise exception.InvalidRunConfig(
            message="synthetic task needs at least 2 classes")
    needed = len(vocab_.RESERVED) + n_classes * signals_per_class + 1
    if vocab_size < needed:
        raise exception.VocabTooSmall(needed=needed, available=vocab_size)

    rng = utils.rng(seed, 20)
    n_background = vocab_size - len(vocab_.RESERVED) - (
        n_classes * signals_per_class)
    ranks = np.arange(1, n_background + 1, dtype=np.float64)
    zipf = ranks ** -ZIPF_EXPONENT
    zipf /= zipf.sum()
    low_signals = min(signals[0], signals_per_class)
    high_signals = min(signals[1], signals_per_class)

    labels = rng.permutation(np.arange(n_examples) % n_classes)
    records = []
    for label in labels:
        n_bg = int(rng.integers(length[0], length[1] + 1))
        words = [background_token(r)
                 for r in rng.choice(n_background, size=n_bg, p=zipf)]
        n_sig = int(rng.integers(low_signals, high_signals + 1))
        for k in rng.choice(signals_per_class, size=n_sig):
            words.insert(int(rng.integers(0, len(words) + 1)),
                         signal_token(label, k))
        records.append((" ".join(words), str(label)))

    n_eval = int(round(n_examples * eval_fraction))
    names = [str(c) for c in range(n_classes)]
    train = dataset.TextDataset(records[n_eval:], labels=names)
    evaluation = dataset.TextDataset(records[:n_eval], labels=names)
    logger.debug("Generated synthetic task: %d train / %d eval examples, "
                 "%d classes", len(train), len(evaluation), n_classes)
    return train, evaluation, train.texts()
