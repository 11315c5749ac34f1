import numpy as np

from moedistill.autograd import functional as F
from moedistill.autograd import tensor
from moedistill import exception
from moedistill.model import configuration
from moedistill.model import ffn
from moedistill import moe
from moedistill import routing
from moedistill import test

D = 6
WIDTH = 4
VOCAB = 20


def random_expert(rng):
    return (rng.normal(size=(D, WIDTH)), rng.normal(size=WIDTH),
            rng.normal(size=(WIDTH, D)), rng.normal(size=D))


def hash_table(strategy, n_experts, seed=0):
    freqs = np.arange(VOCAB, 0, -1, dtype=np.float64)
    return routing.build_routing(strategy, freqs, n_experts, seed)


def gate_table(n_experts, seed=0):
    rng = np.random.default_rng(seed)
    weight = tensor.Tensor(rng.normal(size=(D, n_experts)),
                           requires_grad=True)
    return routing.RoutingTable(configuration.GATE, n_experts, weight=weight)


class MoEFFNTest(test.TestCase):
    def setUp(self):
        super(MoEFFNTest, self).setUp()
        rng = np.random.default_rng(42)
        self.a = rng.normal(size=(3, 5, D))
        self.ids = rng.integers(0, VOCAB, size=(3, 5))
        self.mask = np.ones((3, 5))
        self.mask[1, 3:] = 0.0
        self.experts = [random_expert(rng) for _ in range(3)]

    def tables(self, n_experts):
        return [hash_table(configuration.HASH_RANDOM, n_experts),
                hash_table(configuration.HASH_BALANCED, n_experts),
                gate_table(n_experts)]

    def test_identical_experts_ignore_routing(self):
        expected = ffn.ffn_forward(self.a, *self.experts[0])
        for table in self.tables(3):
            out = moe.moe_ffn(self.a, [self.experts[0]] * 3, table,
                              self.ids, self.mask)
            self.assertArrayClose(expected, out, atol=1e-12)

    def test_single_expert_is_dense(self):
        gamma, beta = np.ones(D), np.zeros(D)
        expected = F.layer_norm(
            self.a + ffn.ffn_forward(self.a, *self.experts[0]), gamma, beta)
        out = moe.moe_forward(self.a, self.experts[:1],
                              hash_table(configuration.HASH_RANDOM, 1),
                              self.ids, self.mask, gamma, beta)
        self.assertArrayClose(expected, out, atol=1e-12)

    def test_matches_per_token_dispatch(self):
        table = hash_table(configuration.HASH_RANDOM, 3, seed=5)
        out = moe.moe_ffn(self.a, self.experts, table, self.ids).data
        for b in range(3):
            for t in range(5):
                expert = self.experts[table.table[self.ids[b, t]]]
                token = ffn.ffn_forward(self.a[b:b + 1, t:t + 1], *expert)
                self.assertArrayClose(token.data[0, 0], out[b, t],
                                      atol=1e-12)

    def test_gate_routes_whole_sentence(self):
        table = gate_table(3, seed=1)
        out = moe.moe_ffn(self.a, self.experts, table, self.ids,
                          self.mask).data
        probs = routing.gate_probs(F.masked_mean(self.a, self.mask),
                                   table.weight.data).data
        for b in range(3):
            expert = self.experts[int(np.argmax(probs[b]))]
            self.assertArrayClose(
                ffn.ffn_forward(self.a[b:b + 1], *expert).data[0], out[b],
                atol=1e-12)

    def test_gate_ignores_padding(self):
        table = gate_table(3, seed=2)
        noisy = self.a.copy()
        noisy[1, 3:] = 1e3
        out = moe.moe_ffn(self.a, self.experts, table, self.ids,
                          self.mask).data
        noisy_out = moe.moe_ffn(noisy, self.experts, table, self.ids,
                                self.mask).data
        self.assertArrayClose(out[1, :3], noisy_out[1, :3], atol=1e-12)

    def test_gate_weight_receives_gradient(self):
        table = gate_table(3, seed=3)
        direction = np.random.default_rng(9).normal(size=(3, 5, D))
        out = moe.moe_ffn(self.a, self.experts, table, self.ids, self.mask)
        tensor.backward((out * direction).sum(), leaves=[table.weight])

        # d(p / stop_grad(p)) = d log p: compare with finite differences
        # of sum_b c_b log p_b[choice_b] at the fixed choice.
        sentence = F.masked_mean(self.a, self.mask).data
        w = table.weight.data.copy()
        choice = np.argmax(sentence @ w, axis=1)
        c = (out.data * direction).sum(axis=(1, 2))

        def objective(weight):
            logits = sentence @ weight
            logp = logits - np.log(np.exp(logits).sum(axis=1,
                                                      keepdims=True))
            return (c * logp[np.arange(3), choice]).sum()

        numeric = np.zeros_like(w)
        step = 1e-6
        for i in range(w.shape[0]):
            for j in range(w.shape[1]):
                plus, minus = w.copy(), w.copy()
                plus[i, j] += step
                minus[i, j] -= step
                numeric[i, j] = (objective(plus) -
                                 objective(minus)) / (2 * step)
        self.assertGreater(np.abs(table.weight.grad).max(), 0.0)
        self.assertArrayClose(numeric, table.weight.grad, atol=1e-6)

    def test_unknown_token(self):
        ids = self.ids.copy()
        ids[0, 0] = VOCAB
        self.assertRaises(exception.UnknownToken, moe.moe_ffn, self.a,
                          self.experts,
                          hash_table(configuration.HASH_RANDOM, 3), ids)


class ExpertSetTest(test.TestCase):
    def test_columns_and_discarded(self):
        provenance = [[0, 1], [0, 2]]
        experts = moe.ExpertSet([None, None], provenance, 1)
        self.assertEqual(2, experts.n_experts)
        self.assertEqual(2, experts.expert_dim)
        self.assertEqual([0, 2], experts.columns(1).tolist())
        self.assertEqual([0], experts.shared_columns().tolist())
        self.assertEqual([3], experts.discarded(4).tolist())
