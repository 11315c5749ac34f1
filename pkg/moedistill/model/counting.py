"""Analytic parameter and multiply-accumulate counts."""

import re

import numpy as np

from moedistill.model import configuration
from moedistill.model import encoder

# Experts other than the first are never touched by a token's forward pass.
_INACTIVE_EXPERT = re.compile(r"^layers\.\d+\.experts\.([1-9]\d*)\.")


def _config(model_or_config):
    return getattr(model_or_config, "config", model_or_config)


def count_params(model_or_config):
    shapes = encoder.parameter_shapes(_config(model_or_config))
    return int(sum(np.prod(shape) for shape in shapes.values()))


def count_effective_params(model_or_config):
    """Parameters used to compute one token's representation.

    Embeddings, heads, attention and the gate count once; of the experts of
    every layer only one is counted.
    """
    shapes = encoder.parameter_shapes(_config(model_or_config))
    return int(sum(np.prod(shape) for name, shape in shapes.items()
                   if not _INACTIVE_EXPERT.match(name)))


def ffn_params(d, width):
    return 2 * d * width + width + d


def flops_breakdown(model_or_config, seq_len=None):
    """Per-token multiply-accumulates by component, summed over layers."""
    config = _config(model_or_config)
    d = config.embed_dim
    seq = config.max_seq_len if seq_len is None else seq_len
    layers = config.layers
    counts = {
        "attention_projections": layers * 4 * d * d,
        "attention_mixing": layers * 2 * seq * d,
        "ffn": layers * 2 * d * config.expert_dim,
        "routing": 0,
    }
    if (config.moe is not None and
            config.moe.routing == configuration.GATE):
        # One projection per sentence, amortized over its tokens.
        counts["routing"] = layers * d * config.moe.experts // max(seq, 1)
    counts["total"] = (counts["attention_projections"] +
                       counts["attention_mixing"] + counts["ffn"])
    return counts


def flops_per_token(model_or_config, seq_len=None):
    """Multiply-accumulates for one token, excluding the gate projection."""
    return flops_breakdown(model_or_config, seq_len)["total"]
