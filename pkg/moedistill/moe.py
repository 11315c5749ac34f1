"""Mixture-of-Experts FFN sublayer with top-1 activation."""

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill.model import ffn
from moedistill import routing as routing_


class ExpertSet(object):
    """The experts of one layer and where their neurons came from.

    ``provenance[e, k]`` is the index, in the original dense FFN, of the
    neuron held in slot `k` of expert `e`; the first `shared_dim` slots of
    every expert hold the same neurons.
    """

    def __init__(self, experts, provenance, shared_dim):
        self.experts = list(experts)
        self.provenance = np.asarray(provenance, dtype=np.int64)
        self.shared_dim = shared_dim

    @property
    def n_experts(self):
        return len(self.experts)

    @property
    def expert_dim(self):
        return self.provenance.shape[1]

    def columns(self, expert):
        return self.provenance[expert]

    def shared_columns(self):
        return self.provenance[0, :self.shared_dim]

    def discarded(self, ffn_hidden):
        return np.setdiff1d(np.arange(ffn_hidden), self.provenance.ravel())

    def __getitem__(self, expert):
        return self.experts[expert]


def _dispatch(flat, experts, assignment):
    """Run every token row of `flat` through its assigned expert."""
    used = np.unique(assignment)
    if used.size == 1:
        return ffn.ffn_forward(flat, *experts[int(used[0])])
    pieces = []
    order = []
    for expert in used:
        rows = np.flatnonzero(assignment == expert)
        pieces.append(ffn.ffn_forward(flat[rows], *experts[int(expert)]))
        order.append(rows)
    stacked = F.concat(pieces, axis=0)
    return stacked[np.argsort(np.concatenate(order), kind="stable")]


def moe_ffn(a, experts, routing, token_ids, mask=None):
    """Expert output for every token of `a` (batch x seq x d), no residual.

    Hash routing sends token t to ``table[token_id_t]`` with weight 1.
    Gate routing sends every token of a sentence to the argmax expert of
    the gate; the output is multiplied by ``p / stop_gradient(p)``, which
    is exactly 1 in the forward pass and lets W_g receive the gradient of
    the selected probability.

    Scaling by ``p`` itself would make N identical experts disagree with
    the single-expert output (``p`` is below 1 whenever N > 1), so the
    forward value must stay 1.
    """
    a = tensor.as_tensor(a)
    batch, seq, d = a.shape
    ids = np.asarray(token_ids, dtype=np.int64).reshape(batch, seq)
    if mask is None:
        mask = np.ones((batch, seq))
    flat = a.reshape(batch * seq, d)

    if routing.is_hash:
        assignment = routing.route(ids).reshape(-1)
        return _dispatch(flat, experts, assignment).reshape(batch, seq, d)

    probs = routing_.gate_probs(F.masked_mean(a, mask), routing.weight)
    choice = np.argmax(probs.data, axis=1)
    selected = probs[np.arange(batch), choice]
    scale = selected / selected.data
    out = _dispatch(flat, experts, np.repeat(choice, seq))
    return out.reshape(batch, seq, d) * scale.reshape(batch, 1, 1)


def moe_forward(a, experts, routing, token_ids, mask, ln_gamma, ln_beta,
                dropout=0.0, rng=None):
    """Layer output X = LayerNorm(A + MoE(A))."""
    out = moe_ffn(a, experts, routing, token_ids, mask)
    out = F.dropout(out, dropout, rng)
    return F.layer_norm(a + out, ln_gamma, ln_beta)
