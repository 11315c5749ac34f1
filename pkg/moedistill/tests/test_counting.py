from moedistill.model import configuration
from moedistill.model import counting
from moedistill import test
from moedistill.tests import fixtures


def bert_base_config(**moe):
    config = configuration.ModelConfig(**fixtures.bert_base_model)
    if moe:
        config = config.with_moe(configuration.MoEConfig(**moe))
    return config


class ParameterCountTest(test.TestCase):
    def test_dense_counts_everything(self):
        config = fixtures.config()
        self.assertEqual(counting.count_params(config),
                         counting.count_effective_params(config))
        model = fixtures.model()
        self.assertEqual(sum(p.size for p in model.parameters()),
                         counting.count_params(model))

    def test_one_expert_per_layer_counted(self):
        dense = fixtures.config()
        moe = fixtures.config(moe=configuration.MoEConfig(experts=4))
        d, dh, layers = 8, 16, 2
        expected = (counting.count_params(dense) -
                    layers * (counting.ffn_params(d, dh) -
                              counting.ffn_params(d, dh // 4)))
        self.assertEqual(expected, counting.count_effective_params(moe))
        self.assertEqual(2 * d * 4 + 4 + d, counting.ffn_params(d, 4))

    def test_effective_matches_activated_tensors(self):
        model = fixtures.model(moe=configuration.MoEConfig(
            experts=2, routing=configuration.GATE))
        activated = sum(p.size for name, p in model.named_parameters()
                        if ".experts." not in name or
                        ".experts.0." in name)
        self.assertEqual(activated, counting.count_effective_params(model))

    def test_single_full_width_expert_equals_dense(self):
        moe = configuration.MoEConfig(experts=1, expert_dim=16)
        self.assertEqual(counting.count_params(fixtures.config()),
                         counting.count_effective_params(
                             fixtures.config(moe=moe)))

    def test_bert_base_shaped_ratio(self):
        dense = counting.count_params(bert_base_config())
        effective = counting.count_effective_params(
            bert_base_config(experts=4, expert_dim=768, shared_dim=512))
        ratio = effective / float(dense)
        self.assertLess(abs(ratio - 66.0 / 110.0) / (66.0 / 110.0), 0.05)


class FlopsTest(test.TestCase):
    def test_ffn_term_scales_with_expert_dim(self):
        dense = counting.flops_breakdown(fixtures.config())
        moe = counting.flops_breakdown(
            fixtures.config(moe=configuration.MoEConfig(experts=4)))
        self.assertEqual(dense["ffn"], 4 * moe["ffn"])
        self.assertEqual(dense["attention_projections"],
                         moe["attention_projections"])

    def test_bert_base_ffn_term_shrinks_four_times(self):
        dense = counting.flops_breakdown(bert_base_config(), 128)
        moe = counting.flops_breakdown(bert_base_config(experts=4), 128)
        self.assertEqual(2 * 768 * 3072 * 12, dense["ffn"])
        self.assertEqual(dense["ffn"], 4 * moe["ffn"])

    def test_invariant_in_number_of_experts(self):
        counts = [counting.flops_per_token(
            fixtures.config(moe=configuration.MoEConfig(
                experts=n, expert_dim=4)))
            for n in (1, 2, 4)]
        self.assertEqual(1, len(set(counts)))

    def test_gate_reported_separately(self):
        hash_ = counting.flops_breakdown(fixtures.config(
            moe=configuration.MoEConfig(experts=2)), 8)
        gate = counting.flops_breakdown(fixtures.config(
            moe=configuration.MoEConfig(experts=2,
                                        routing=configuration.GATE)), 8)
        self.assertEqual(0, hash_["routing"])
        self.assertEqual(2 * 8 * 2 // 8, gate["routing"])
        self.assertEqual(hash_["total"], gate["total"])

    def test_total_is_sum_of_terms(self):
        counts = counting.flops_breakdown(fixtures.config(), 10)
        d, layers = 8, 2
        self.assertEqual(layers * (4 * d * d + 2 * 10 * d + 2 * d * 16),
                         counts["total"])
        self.assertEqual(counts["total"],
                         counting.flops_per_token(fixtures.config(), 10))
        self.assertIsInstance(counts["total"], int)
