"""
Turn the dense FFNs of a fine-tuned encoder into expert layers.

With the neurons of a layer ranked by importance, (1) most important
first, expert e of N receives::

    (1), ..., (s), (s + e), (s + e + N), (s + e + 2N), ...

until it holds `expert_dim` neurons.  A neuron carries its W1 column, its
b1 entry and its W2 row; every expert starts from its own copy of b2.
Neurons that no expert reaches are discarded.

The adapters in this package differ only in the ranking they feed to that
procedure; they are discovered by :class:`AdapterHandler`.
"""

import logging

import numpy as np

from moedistill import exception
from moedistill import loadables
from moedistill.model import configuration
from moedistill.model import encoder
from moedistill import moe
from moedistill import routing as routing_
from moedistill import utils

logger = logging.getLogger(__name__)


def adapt_ffn(ffn, ordering, n_experts, shared_dim, expert_dim=None):
    """Split one dense FFN ``(W1, b1, W2, b2)`` into an ExpertSet."""
    w1, b1, w2, b2 = [np.asarray(getattr(t, "data", t)) for t in ffn]
    hidden = b1.size
    ordering = np.asarray(ordering, dtype=np.int64)
    if n_experts < 1 or n_experts > hidden:
        raise exception.AdaptationError(
            reason="%d experts for an FFN of width %d" % (n_experts, hidden))
    if expert_dim is None:
        expert_dim = hidden // n_experts
    if not 0 <= shared_dim <= expert_dim:
        raise exception.AdaptationError(
            reason="shared_dim %d not in [0, %d]" % (shared_dim, expert_dim))
    if shared_dim + n_experts * (expert_dim - shared_dim) > hidden:
        raise exception.AdaptationError(
            reason="%d experts of width %d sharing %d exceed width %d" % (
                n_experts, expert_dim, shared_dim, hidden))
    if sorted(ordering.tolist()) != list(range(hidden)):
        raise exception.AdaptationError(
            reason="ordering is not a permutation of 0..%d" % (hidden - 1))

    unique = expert_dim - shared_dim
    experts = []
    provenance = []
    for e in range(n_experts):
        slots = np.concatenate([
            ordering[:shared_dim],
            ordering[shared_dim + e + n_experts * np.arange(unique)]])
        provenance.append(slots)
        experts.append((w1[:, slots].copy(), b1[slots].copy(),
                        w2[slots, :].copy(), b2.copy()))
    return moe.ExpertSet(experts, np.stack(provenance), shared_dim)


class BaseAdapter(object):
    """Ranks the neurons of a layer before they are split into experts."""

    name = None

    def order(self, ordering, rng):
        raise NotImplementedError

    def adapt(self, ffn, ordering, n_experts, shared_dim, expert_dim=None,
              rng=None):
        return adapt_ffn(ffn, self.order(np.asarray(ordering), rng),
                         n_experts, shared_dim, expert_dim)


class AdapterHandler(loadables.BaseLoader):
    def __init__(self):
        super(AdapterHandler, self).__init__(BaseAdapter)

    def get(self, name):
        for cls in self.get_all_classes():
            if cls.name == name:
                return cls()
        raise exception.AdapterNotFound(adapter=name)


def adapt_random(ffn, ordering, n_experts, shared_dim, seed=0,
                 expert_dim=None):
    return AdapterHandler().get("random").adapt(
        ffn, ordering, n_experts, shared_dim, expert_dim, utils.rng(seed, 3))


def adapt_inverse(ffn, ordering, n_experts, shared_dim, expert_dim=None):
    return AdapterHandler().get("inverse").adapt(
        ffn, ordering, n_experts, shared_dim, expert_dim)


def adapt_model(teacher, table, moe_config, vocab_freqs, seed=0):
    """MoE student built from `teacher` and its importance table."""
    if teacher.is_moe:
        raise exception.AlreadyAdapted()
    config = teacher.config.with_moe(moe_config)
    config.validate()
    adapter = AdapterHandler().get(moe_config.adaptation)
    ordering = table.ordering
    n_experts = moe_config.experts
    d = config.embed_dim

    params = dict((name, value) for name, value in
                  teacher.state_dict().items() if ".ffn.w" not in name
                  and ".ffn.b" not in name)
    provenance = []
    for i in range(config.layers):
        if i not in ordering:
            raise exception.AdaptationError(
                reason="importance table has no scores for layer %d" % i)
        experts = adapter.adapt(teacher.ffn(i), ordering[i], n_experts,
                                moe_config.shared_dim, config.expert_dim,
                                rng=utils.rng(seed, 3, i))
        for e, weights in enumerate(experts.experts):
            for key, value in zip(encoder.FFN_KEYS, weights):
                params["layers.%d.experts.%d.%s" % (i, e, key)] = value
        provenance.append(experts.provenance)
        logger.debug("Layer %d: %d experts of width %d, %d neurons "
                     "discarded", i, n_experts, config.expert_dim,
                     experts.discarded(config.ffn_hidden).size)

    routing = routing_.build_routing(moe_config.routing, vocab_freqs,
                                     n_experts, seed, d=d)
    if routing.is_hash:
        loads, deviation = routing_.routing_loads(routing, vocab_freqs)
        logger.info("%s routing loads %s (max deviation %.3f)",
                    routing.strategy, loads.tolist(), deviation)
    else:
        for i in range(config.layers):
            gate = routing_.build_routing(configuration.GATE, vocab_freqs,
                                          n_experts, seed, d=d, layer=i)
            params["layers.%d.gate.weight" % i] = gate.weight
        routing = routing_.RoutingTable(configuration.GATE, n_experts)

    logger.info("Adapted %d layers with the '%s' adapter", config.layers,
                adapter.name)
    return encoder.EncoderModel(config, params, routing=routing,
                                provenance=provenance,
                                metadata={"importance": table.digest()})
