import copy

import numpy as np

from moedistill.data import dataset
from moedistill.data import synthetic
from moedistill.data import vocab as vocab_
from moedistill.model import configuration
from moedistill.model import encoder

tiny_model = {
    "vocab_size": 20,
    "embed_dim": 8,
    "ffn_hidden": 16,
    "layers": 2,
    "heads": 2,
    "max_seq_len": 12,
    "num_labels": 2,
    "dropout": 0.0,
}

bert_base_model = {
    "vocab_size": 30522,
    "embed_dim": 768,
    "ffn_hidden": 3072,
    "layers": 12,
    "heads": 12,
    "max_seq_len": 512,
    "num_labels": 2,
}

# token -> frequency, balanced into (a, d) and (b, c)
balanced_freqs = [4, 3, 2, 1]

tsv_lines = [
    "good movie\t1",
    "bad movie\t0",
    "great plot , good cast\t1",
    "boring\t0",
]

run_config = {
    "seed": 3,
    "model": {
        "embed_dim": 8,
        "ffn_hidden": 16,
        "layers": 2,
        "heads": 2,
        "max_seq_len": 40,
        "dropout": 0.1,
    },
    "moe": {
        "experts": 2,
        "shared_dim": 2,
        "routing": "hash_random",
        "adaptation": "import",
    },
    "teacher": {"epochs": 1, "batch_size": 16},
    "distill": {"epochs": 1, "batch_size": 16},
    "data": {
        "synthetic": {
            "n_examples": 60,
            "n_classes": 2,
            "vocab_size": 40,
        },
    },
    "bench": {"repeats": 1, "warmup": 0, "examples": 2},
}

ablation_definition = """
---
seeds: 2
studies:
    "Adaptation methods":
        axis: moe.adaptation
        values: [import, random]
        chart: bar
    "Number of experts":
        axis: moe.experts
        values: [1, 2]
        chart: line
"""


def config(**overrides):
    values = copy.deepcopy(tiny_model)
    moe = overrides.pop("moe", None)
    values.update(overrides)
    return configuration.ModelConfig(moe=moe, **values)


def model(seed=0, std=0.3, **overrides):
    """Tiny encoder with non-trivial biases and layer-norm parameters."""
    cfg = config(**overrides)
    rng = np.random.default_rng(seed)
    params = dict((name, rng.normal(0.0, std, size=shape))
                  for name, shape in encoder.parameter_shapes(cfg).items())
    for name in params:
        if name.endswith("gamma"):
            params[name] += 1.0
    return encoder.EncoderModel(cfg, params, seed=seed)


def token_batch(seed=0, batch=3, seq=6, vocab_size=20, padded=True):
    """Random token ids (CLS first) and a mask with trailing padding."""
    rng = np.random.default_rng(seed)
    ids = rng.integers(3, vocab_size, size=(batch, seq))
    ids[:, 0] = 2
    mask = np.ones((batch, seq))
    if padded:
        for row in range(batch):
            length = int(rng.integers(2, seq + 1))
            mask[row, length:] = 0.0
            ids[row, length:] = 0
    return ids, mask


def examples(seed=0, n=8, vocab_size=20, length=(2, 8), num_labels=2):
    rng = np.random.default_rng(seed)
    items = []
    for i in range(n):
        size = int(rng.integers(length[0], length[1] + 1))
        ids = np.concatenate([[2], rng.integers(3, vocab_size, size=size - 1)])
        items.append(dataset.Example(ids, i % num_labels))
    return dataset.Dataset(items, num_labels)


def synthetic_task(seed=0, n_examples=80, n_classes=2, vocab_size=40,
                   max_len=32):
    """Encoded (train, eval) splits of the synthetic task and its vocab."""
    train, evaluation, corpus = synthetic.gen_synthetic_task(
        seed, n_examples, n_classes, vocab_size)
    vocab = vocab_.build_vocab(corpus)
    return (train.encode(vocab, max_len),
            evaluation.encode(vocab, max_len, train.labels), vocab)
