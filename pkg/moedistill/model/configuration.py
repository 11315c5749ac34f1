import dataclasses
from typing import Optional

from moedistill import exception

HASH_RANDOM = "hash_random"
HASH_BALANCED = "hash_balanced"
GATE = "gate"
ROUTING_STRATEGIES = (HASH_RANDOM, HASH_BALANCED, GATE)

ADAPTATION_STRATEGIES = ("import", "random", "inverse")


@dataclasses.dataclass
class MoEConfig(object):
    """Shape of the expert layers that replace the dense FFNs."""

    experts: int = 4
    expert_dim: Optional[int] = None
    shared_dim: int = 0
    routing: str = HASH_RANDOM
    adaptation: str = "import"

    def resolve_expert_dim(self, ffn_hidden):
        if self.expert_dim is None:
            return ffn_hidden // self.experts
        return self.expert_dim

    def validate(self, ffn_hidden):
        if self.experts < 1:
            raise exception.InvalidModelConfig(reason="experts must be >= 1")
        if self.experts > ffn_hidden:
            raise exception.InvalidModelConfig(
                reason="%d experts exceed FFN width %d" % (self.experts,
                                                          ffn_hidden))
        expert_dim = self.resolve_expert_dim(ffn_hidden)
        if not 0 < expert_dim <= ffn_hidden:
            raise exception.InvalidModelConfig(
                reason="expert_dim %d not in (0, %d]" % (expert_dim,
                                                        ffn_hidden))
        if not 0 <= self.shared_dim <= expert_dim:
            raise exception.InvalidModelConfig(
                reason="shared_dim %d not in [0, %d]" % (self.shared_dim,
                                                        expert_dim))
        if self.routing not in ROUTING_STRATEGIES:
            raise exception.UnknownRoutingStrategy(strategy=self.routing)
        if self.adaptation not in ADAPTATION_STRATEGIES:
            raise exception.AdapterNotFound(adapter=self.adaptation)


@dataclasses.dataclass
class ModelConfig(object):
    """Architecture of a dense or MoE encoder (desk-scale defaults)."""

    vocab_size: int = 2048
    embed_dim: int = 64
    ffn_hidden: int = 256
    layers: int = 4
    heads: int = 4
    max_seq_len: int = 64
    num_labels: int = 2
    dropout: float = 0.1
    moe: Optional[MoEConfig] = None

    @property
    def expert_dim(self):
        if self.moe is None:
            return self.ffn_hidden
        return self.moe.resolve_expert_dim(self.ffn_hidden)

    def validate(self):
        for field in ("vocab_size", "embed_dim", "ffn_hidden", "layers",
                      "heads", "max_seq_len", "num_labels"):
            if getattr(self, field) < 1:
                raise exception.InvalidModelConfig(
                    reason="%s must be positive" % field)
        if self.embed_dim % self.heads:
            raise exception.InvalidModelConfig(
                reason="embed_dim %d not divisible by %d heads" % (
                    self.embed_dim, self.heads))
        if not 0.0 <= self.dropout < 1.0:
            raise exception.InvalidModelConfig(reason="dropout not in [0, 1)")
        if self.moe is not None:
            self.moe.validate(self.ffn_hidden)

    def with_moe(self, moe):
        return dataclasses.replace(self, moe=moe)

    def to_dict(self):
        return dataclasses.asdict(self)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        moe = d.pop("moe", None)
        if moe is not None:
            moe = MoEConfig(**moe)
        return cls(moe=moe, **d)
