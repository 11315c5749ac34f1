"""Token-to-expert routing rules.

Hash strategies pre-assign every vocabulary id to one expert; the
assignment never changes afterwards.  The gate strategy routes a whole
sentence with a softmax over ``mean(A) W_g``.
"""

import logging

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill import exception
from moedistill.model import configuration
from moedistill import utils

logger = logging.getLogger(__name__)

GATE_INIT_STD = 0.02


class RoutingTable(object):
    def __init__(self, strategy, n_experts, table=None, weight=None):
        if strategy not in configuration.ROUTING_STRATEGIES:
            raise exception.UnknownRoutingStrategy(strategy=strategy)
        self.strategy = strategy
        self.n_experts = n_experts
        self.table = None if table is None else np.asarray(table, np.int64)
        # Gate only; the model links this to its trainable parameter.
        self.weight = weight

    @property
    def is_hash(self):
        return self.strategy != configuration.GATE

    def route(self, token_ids):
        """Expert id of every token (hash strategies)."""
        ids = np.asarray(token_ids, dtype=np.int64)
        if ids.size and (ids.min() < 0 or ids.max() >= self.table.size):
            bad = ids.max() if ids.max() >= self.table.size else ids.min()
            raise exception.UnknownToken(token_id=int(bad),
                                         vocab_size=self.table.size)
        return self.table[ids]

    def loads(self, frequencies):
        """Per-expert sum of token frequencies under this table."""
        return np.bincount(self.table, weights=frequencies,
                           minlength=self.n_experts)

    def to_dict(self):
        d = {"strategy": self.strategy, "n_experts": self.n_experts}
        if self.table is not None:
            d["table"] = self.table.tolist()
        return d

    @classmethod
    def from_dict(cls, d):
        return cls(d["strategy"], d["n_experts"], table=d.get("table"))


def routing_loads(table, frequencies):
    """Loads per expert and their largest relative deviation from uniform."""
    loads = table.loads(frequencies)
    mean = loads.sum() / table.n_experts
    deviation = float(np.abs(loads - mean).max() / mean) if mean else 0.0
    return loads, deviation


def _balanced_table(frequencies, n_experts):
    # Greedy: most frequent first, onto the least loaded expert.
    table = np.zeros(frequencies.size, dtype=np.int64)
    loads = np.zeros(n_experts)
    for token in np.argsort(-frequencies, kind="stable"):
        expert = int(np.argmin(loads))
        table[token] = expert
        loads[expert] += frequencies[token]
    return table


def build_routing(strategy, vocab_freqs, n_experts, seed, d=None, layer=0):
    """Build the routing rule for one MoE layer.

    `vocab_freqs` is indexed by token id (PAD carries zero frequency).
    Gate weights draw from a stream of their own per `layer`.
    """
    freqs = np.asarray(vocab_freqs, dtype=np.float64)
    if freqs.size == 0:
        raise exception.EmptyVocabulary()
    if strategy == configuration.HASH_RANDOM:
        rng = utils.rng(seed, 1)
        table = rng.integers(0, n_experts, size=freqs.size)
        return RoutingTable(strategy, n_experts, table=table)
    if strategy == configuration.HASH_BALANCED:
        return RoutingTable(strategy, n_experts,
                            table=_balanced_table(freqs, n_experts))
    if strategy == configuration.GATE:
        if d is None:
            raise exception.AdaptationError(
                reason="gate routing needs the embedding dimension")
        rng = utils.rng(seed, 2, layer)
        weight = rng.normal(0.0, GATE_INIT_STD, size=(d, n_experts))
        return RoutingTable(strategy, n_experts, weight=weight)
    raise exception.UnknownRoutingStrategy(strategy=strategy)


def gate_probs(sentence_repr, w_g):
    """Row-wise softmax(sentence_repr W_g): batch x N expert probabilities."""
    return F.softmax(tensor.as_tensor(sentence_repr) @ w_g)
