"""
BERT-style encoder for sequence classification.

Post-layernorm blocks: ``A = LN(X + Attn(X))`` followed by
``X' = LN(A + FFN(A))`` where the FFN is either dense or a set of experts.
Parameters live in one flat, ordered name -> Tensor mapping so that
optimizers, checkpoints and gradient checks can walk them uniformly.
"""

import collections
import logging
import math

import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill import exception
from moedistill.model import configuration
from moedistill.model import ffn
from moedistill import moe
from moedistill import routing as routing_
from moedistill import utils

logger = logging.getLogger(__name__)

INIT_STD = 0.02
MASK_BIAS = -1e9

FFN_KEYS = ("w1", "b1", "w2", "b2")


def parameter_shapes(config):
    """Ordered name -> shape of every parameter of `config`."""
    d, dh = config.embed_dim, config.ffn_hidden
    shapes = collections.OrderedDict()
    shapes["embeddings.token"] = (config.vocab_size, d)
    shapes["embeddings.position"] = (config.max_seq_len, d)
    shapes["embeddings.ln.gamma"] = (d,)
    shapes["embeddings.ln.beta"] = (d,)
    for i in range(config.layers):
        prefix = "layers.%d." % i
        for proj in ("query", "key", "value", "output"):
            shapes[prefix + "attention.%s.weight" % proj] = (d, d)
            shapes[prefix + "attention.%s.bias" % proj] = (d,)
        shapes[prefix + "attention.ln.gamma"] = (d,)
        shapes[prefix + "attention.ln.beta"] = (d,)
        if config.moe is None:
            experts = [(prefix + "ffn.", dh)]
        else:
            k = config.expert_dim
            experts = [(prefix + "experts.%d." % e, k)
                       for e in range(config.moe.experts)]
        for name, width in experts:
            shapes[name + "w1"] = (d, width)
            shapes[name + "b1"] = (width,)
            shapes[name + "w2"] = (width, d)
            shapes[name + "b2"] = (d,)
        if (config.moe is not None and
                config.moe.routing == configuration.GATE):
            shapes[prefix + "gate.weight"] = (d, config.moe.experts)
        shapes[prefix + "ffn.ln.gamma"] = (d,)
        shapes[prefix + "ffn.ln.beta"] = (d,)
    shapes["pooler.weight"] = (d, d)
    shapes["pooler.bias"] = (d,)
    shapes["classifier.weight"] = (d, config.num_labels)
    shapes["classifier.bias"] = (config.num_labels,)
    return shapes


def init_params(config, seed):
    """Random initial parameters: N(0, 0.02) weights, zero biases, unit LN."""
    rng = utils.rng(seed, 0)
    params = collections.OrderedDict()
    for name, shape in parameter_shapes(config).items():
        if name.endswith("gamma"):
            data = np.ones(shape)
        elif len(shape) == 1:
            data = np.zeros(shape)
        else:
            data = rng.normal(0.0, INIT_STD, size=shape)
        params[name] = data
    return params


class LayerOutputs(object):
    """Hidden states X^0..X^L, attention outputs A^1..A^L and the mask."""

    def __init__(self, hidden_states, attention_outputs, mask):
        self.hidden_states = hidden_states
        self.attention_outputs = attention_outputs
        self.mask = mask

    def __len__(self):
        return len(self.hidden_states)

    def __getitem__(self, layer):
        return self.hidden_states[layer]


class EncoderModel(object):
    def __init__(self, config, params=None, routing=None, provenance=None,
                 seed=0, metadata=None):
        config.validate()
        self.config = config
        self.metadata = dict(metadata or {})
        if params is None:
            params = init_params(config, seed)
        shapes = parameter_shapes(config)
        missing = set(shapes) - set(params)
        if missing:
            raise exception.InvalidModelConfig(
                reason="missing parameters: %s" % ", ".join(sorted(missing)))
        self.params = collections.OrderedDict()
        for name, shape in shapes.items():
            value = params[name]
            data = value.data if isinstance(value, tensor.Tensor) else value
            data = np.array(data, dtype=np.float64)
            if data.shape != tuple(shape):
                raise exception.ShapeMismatch(op="load:%s" % name,
                                              shapes=[data.shape, shape])
            self.params[name] = tensor.Tensor(data, requires_grad=True,
                                              name=name)

        self.routing = None
        self.provenance = None
        if config.moe is not None:
            if routing is None:
                routing = routing_.build_routing(
                    config.moe.routing, np.ones(config.vocab_size),
                    config.moe.experts, seed, d=config.embed_dim)
            self.routing = routing
            if provenance is None:
                k = config.expert_dim
                slots = np.arange(config.moe.experts * k).reshape(-1, k)
                provenance = [slots % config.ffn_hidden] * config.layers
            self.provenance = [np.asarray(p, dtype=np.int64)
                               for p in provenance]

    @property
    def is_moe(self):
        return self.config.moe is not None

    def __call__(self, token_ids, mask=None, dropout_rng=None):
        return self.forward(token_ids, mask, dropout_rng)

    def named_parameters(self):
        return list(self.params.items())

    def parameters(self):
        return list(self.params.values())

    def zero_grad(self):
        for p in self.params.values():
            p.zero_grad()

    def state_dict(self):
        return collections.OrderedDict(
            (name, p.data.copy()) for name, p in self.params.items())

    def copy(self):
        return EncoderModel(self.config, self.state_dict(),
                            routing=self.routing,
                            provenance=self.provenance,
                            metadata=self.metadata)

    def ffn(self, layer):
        """(W1, b1, W2, b2) of a dense layer."""
        if self.is_moe:
            raise exception.AlreadyAdapted()
        prefix = "layers.%d.ffn." % layer
        return tuple(self.params[prefix + key] for key in FFN_KEYS)

    def expert_set(self, layer):
        experts = []
        for e in range(self.config.moe.experts):
            prefix = "layers.%d.experts.%d." % (layer, e)
            experts.append(tuple(self.params[prefix + key]
                                 for key in FFN_KEYS))
        return moe.ExpertSet(experts, self.provenance[layer],
                             self.config.moe.shared_dim)

    def layer_routing(self, layer):
        """The routing rule of one layer (gate weight linked to params)."""
        if self.routing.is_hash:
            return self.routing
        return routing_.RoutingTable(
            self.routing.strategy, self.routing.n_experts,
            weight=self.params["layers.%d.gate.weight" % layer])

    def _check_inputs(self, token_ids, mask):
        ids = np.asarray(token_ids, dtype=np.int64)
        if ids.ndim == 1:
            ids = ids[None, :]
        if ids.shape[1] > self.config.max_seq_len:
            raise exception.SequenceTooLong(length=ids.shape[1],
                                            max_len=self.config.max_seq_len)
        vocab = self.config.vocab_size
        if ids.size and (ids.min() < 0 or ids.max() >= vocab):
            bad = ids.max() if ids.max() >= vocab else ids.min()
            raise exception.UnknownToken(token_id=int(bad), vocab_size=vocab)
        if mask is None:
            mask = np.ones(ids.shape)
        mask = np.asarray(mask, dtype=np.float64).reshape(ids.shape)
        return ids, mask

    def _attention(self, layer, x, mask, rng):
        p = self.params
        prefix = "layers.%d.attention." % layer
        batch, seq, d = x.shape
        heads = self.config.heads
        head_dim = d // heads

        def split(name):
            out = F.linear(x, p[prefix + name + ".weight"],
                           p[prefix + name + ".bias"])
            return out.reshape(batch, seq, heads, head_dim).transpose(
                0, 2, 1, 3)

        q, k, v = split("query"), split("key"), split("value")
        scores = (q @ k.transpose(0, 1, 3, 2)) / math.sqrt(head_dim)
        bias = ((1.0 - mask) * MASK_BIAS)[:, None, None, :]
        probs = F.softmax(scores + bias)
        context = (probs @ v).transpose(0, 2, 1, 3).reshape(batch, seq, d)
        out = F.linear(context, p[prefix + "output.weight"],
                       p[prefix + "output.bias"])
        out = F.dropout(out, self.config.dropout, rng)
        return F.layer_norm(x + out, p[prefix + "ln.gamma"],
                            p[prefix + "ln.beta"])

    def _feed_forward(self, layer, a, token_ids, mask, rng):
        gamma = self.params["layers.%d.ffn.ln.gamma" % layer]
        beta = self.params["layers.%d.ffn.ln.beta" % layer]
        if self.is_moe:
            return moe.moe_forward(a, self.expert_set(layer),
                                   self.layer_routing(layer), token_ids,
                                   mask, gamma, beta,
                                   dropout=self.config.dropout, rng=rng)
        out = ffn.ffn_forward(a, *self.ffn(layer))
        out = F.dropout(out, self.config.dropout, rng)
        return F.layer_norm(a + out, gamma, beta)

    def forward(self, token_ids, mask=None, dropout_rng=None):
        """Logits (batch x num_labels) and the per-layer outputs.

        Dropout is active only when `dropout_rng` is given.
        """
        ids, mask = self._check_inputs(token_ids, mask)
        p = self.params
        seq = ids.shape[1]
        x = p["embeddings.token"][ids] + p["embeddings.position"][
            np.arange(seq)]
        x = F.layer_norm(x, p["embeddings.ln.gamma"], p["embeddings.ln.beta"])

        hidden = [x]
        attention = []
        for i in range(self.config.layers):
            a = self._attention(i, x, mask, dropout_rng)
            x = self._feed_forward(i, a, ids, mask, dropout_rng)
            attention.append(a)
            hidden.append(x)

        pooled = F.tanh(F.linear(x[:, 0, :], p["pooler.weight"],
                                 p["pooler.bias"]))
        logits = F.linear(pooled, p["classifier.weight"],
                          p["classifier.bias"])
        return logits, LayerOutputs(hidden, attention, mask)


def encoder_forward(token_ids, mask, model, dropout_rng=None):
    return model.forward(token_ids, mask, dropout_rng)
