import numpy as np

from moedistill import exception
from moedistill.model import configuration
from moedistill import routing
from moedistill import test
from moedistill.tests import fixtures

ZIPF_FREQS = 1000.0 / np.arange(1, 2001) ** 1.1


class HashRoutingTest(test.TestCase):
    def test_same_seed_same_table(self):
        first = routing.build_routing(configuration.HASH_RANDOM,
                                      np.ones(50), 4, 7)
        second = routing.build_routing(configuration.HASH_RANDOM,
                                       np.ones(50), 4, 7)
        other = routing.build_routing(configuration.HASH_RANDOM,
                                      np.ones(50), 4, 8)
        np.testing.assert_array_equal(first.table, second.table)
        self.assertFalse(np.array_equal(first.table, other.table))

    def test_expert_ids_in_range(self):
        for strategy in (configuration.HASH_RANDOM,
                         configuration.HASH_BALANCED):
            table = routing.build_routing(strategy, ZIPF_FREQS, 3, 0)
            self.assertEqual(2000, table.table.size)
            self.assertTrue(0 <= table.table.min())
            self.assertTrue(table.table.max() < 3)

    def test_balanced_greedy_assignment(self):
        table = routing.build_routing(configuration.HASH_BALANCED,
                                      fixtures.balanced_freqs, 2, 0)
        self.assertEqual([0, 1, 1, 0], table.table.tolist())
        loads, deviation = routing.routing_loads(table,
                                                 fixtures.balanced_freqs)
        self.assertEqual([5.0, 5.0], loads.tolist())
        self.assertEqual(0.0, deviation)

    def test_balanced_ties_go_to_lowest_expert(self):
        table = routing.build_routing(configuration.HASH_BALANCED,
                                      [1, 1, 1], 4, 0)
        self.assertEqual([0, 1, 2], table.table.tolist())

    def test_balanced_zipf_loads_near_uniform(self):
        table = routing.build_routing(configuration.HASH_BALANCED,
                                      ZIPF_FREQS, 4, 0)
        _, deviation = routing.routing_loads(table, ZIPF_FREQS)
        self.assertLessEqual(deviation, 0.1)

    def test_route_is_a_lookup(self):
        table = routing.build_routing(configuration.HASH_RANDOM,
                                      np.ones(20), 4, 1)
        ids = np.array([[3, 7, 3], [0, 19, 7]])
        routed = table.route(ids)
        self.assertEqual((2, 3), routed.shape)
        self.assertEqual(routed[0, 0], routed[0, 2])
        self.assertEqual(table.table[19], routed[1, 1])

    def test_route_unknown_token(self):
        table = routing.build_routing(configuration.HASH_RANDOM,
                                      np.ones(20), 4, 1)
        self.assertRaises(exception.UnknownToken, table.route, [[2, 20]])

    def test_dict_round_trip(self):
        table = routing.build_routing(configuration.HASH_BALANCED,
                                      ZIPF_FREQS, 4, 0)
        loaded = routing.RoutingTable.from_dict(table.to_dict())
        self.assertEqual(table.strategy, loaded.strategy)
        np.testing.assert_array_equal(table.table, loaded.table)

    def test_empty_vocabulary(self):
        self.assertRaises(exception.EmptyVocabulary, routing.build_routing,
                          configuration.HASH_RANDOM, [], 4, 0)

    def test_unknown_strategy(self):
        self.assertRaises(exception.UnknownRoutingStrategy,
                          routing.build_routing, "hash_lsh", [1, 2], 2, 0)


class GateRoutingTest(test.TestCase):
    def test_zero_weight_is_uniform(self):
        probs = routing.gate_probs(np.ones((3, 8)), np.zeros((8, 4)))
        self.assertArrayClose(np.full((3, 4), 0.25), probs, atol=0)

    def test_matches_plain_softmax(self):
        rng = np.random.default_rng(0)
        x, w = rng.normal(size=(5, 8)), rng.normal(size=(8, 3))
        logits = x @ w
        expected = np.exp(logits) / np.exp(logits).sum(axis=1,
                                                       keepdims=True)
        probs = routing.gate_probs(x, w)
        self.assertArrayClose(expected, probs, atol=1e-12)
        self.assertArrayClose(np.ones(5), probs.data.sum(axis=1),
                              atol=1e-12)

    def test_gate_weight_small_and_seeded(self):
        first = routing.build_routing(configuration.GATE, np.ones(10), 4, 3,
                                      d=8)
        second = routing.build_routing(configuration.GATE, np.ones(10), 4, 3,
                                       d=8)
        self.assertEqual((8, 4), first.weight.shape)
        self.assertFalse(first.is_hash)
        np.testing.assert_array_equal(first.weight, second.weight)
        self.assertLess(np.abs(first.weight).max(), 0.2)

    def test_gate_needs_dimension(self):
        self.assertRaises(exception.AdaptationError, routing.build_routing,
                          configuration.GATE, np.ones(10), 4, 3)
