import copy
import json
import os

import yaml

from moedistill import checkpoint
from moedistill import exception
from moedistill import importance
from moedistill import pipeline
from moedistill import test
from moedistill.tests import fixtures
from moedistill import utils


def run_config(**sections):
    doc = copy.deepcopy(fixtures.run_config)
    doc.update(sections)
    return doc


class RunConfigTest(test.TestCase):
    def test_from_dict(self):
        config = pipeline.RunConfig.from_dict(run_config())
        self.assertEqual(2, config.moe.experts)
        self.assertEqual(8, config.model.embed_dim)
        self.assertIsNone(config.model.moe)
        self.assertEqual(3, config.teacher.seed)
        self.assertEqual(3, config.distill.seed)
        self.assertEqual(1.0, config.distill.lambda_distill)
        self.assertEqual(4, config.data["synthetic"]["signals_per_class"])

    def test_overrides_reach_training(self):
        config = pipeline.RunConfig.from_dict(run_config())
        config = config.with_overrides(seed=9, output_dir="elsewhere")
        self.assertEqual(9, config.seed)
        self.assertEqual(9, config.teacher.seed)
        self.assertEqual(9, config.distill.seed)
        self.assertEqual("elsewhere", config.output_dir)

    def test_missing_section(self):
        doc = run_config()
        del doc["model"]
        self.assertRaises(exception.MissingSection,
                          pipeline.RunConfig.from_dict, doc)

    def test_unknown_section(self):
        self.assertRaises(exception.InvalidRunConfig,
                          pipeline.RunConfig.from_dict,
                          run_config(optimizer={"name": "sgd"}))

    def test_unknown_field(self):
        self.assertRaises(exception.InvalidRunConfig,
                          pipeline.RunConfig.from_dict,
                          run_config(teacher={"momentum": 0.9}))

    def test_invalid_choices(self):
        moe = dict(fixtures.run_config["moe"], routing="hash_lsh")
        self.assertRaises(exception.InvalidChoice,
                          pipeline.RunConfig.from_dict, run_config(moe=moe))
        self.assertRaises(exception.InvalidChoice,
                          pipeline.RunConfig.from_dict,
                          run_config(distill={"layer_set": "odd"}))

    def test_incompatible_experts(self):
        moe = dict(fixtures.run_config["moe"], shared_dim=12)
        self.assertRaises(exception.InvalidModelConfig,
                          pipeline.RunConfig.from_dict, run_config(moe=moe))

    def test_tsv_paths_resolved(self):
        base = self.tempdir()
        with open(os.path.join(base, "train.tsv"), "w") as f:
            f.write("\n".join(fixtures.tsv_lines))
        config = pipeline.RunConfig.from_dict(
            run_config(data={"train": "train.tsv"}), base)
        self.assertEqual(os.path.join(base, "train.tsv"),
                         config.data["train"])
        self.assertFalse(config.data["has_header"])
        self.assertRaises(exception.PathNotFound,
                          pipeline.RunConfig.from_dict,
                          run_config(data={"train": "absent.tsv"}), base)

    def test_from_yaml_file(self):
        path = os.path.join(self.tempdir(), "run.yaml")
        with open(path, "w") as f:
            yaml.safe_dump(run_config(), f)
        config = pipeline.RunConfig.from_file(path)
        self.assertEqual(3, config.seed)

    def test_missing_file(self):
        self.assertRaises(exception.PathNotFound,
                          pipeline.RunConfig.from_file,
                          os.path.join(self.tempdir(), "run.json"))


class PipelineTest(test.TestCase):
    def setUp(self):
        super(PipelineTest, self).setUp()
        self.output_dir = self.tempdir()
        config = pipeline.RunConfig.from_dict(run_config())
        self.pipeline = pipeline.Pipeline(
            config.with_overrides(output_dir=self.output_dir))

    def test_tsv_without_eval_split(self):
        base = self.tempdir()
        with open(os.path.join(base, "train.tsv"), "w") as f:
            f.write("\n".join(fixtures.tsv_lines))
        config = pipeline.RunConfig.from_dict(
            run_config(data={"train": "train.tsv"}, output_dir=base), base)
        train, evaluation = pipeline.Pipeline(config).prepare_data()
        self.assertEqual(4, len(train))
        self.assertIs(train, evaluation)
        self.assertTrue(os.path.exists(os.path.join(base, pipeline.VOCAB)))

    def test_run_writes_artifacts(self):
        result = self.pipeline.run()
        for name in (pipeline.VOCAB, pipeline.TEACHER, pipeline.IMPORTANCE,
                     pipeline.ADAPTED, pipeline.STUDENT, pipeline.METRICS,
                     pipeline.EVAL, pipeline.BENCH):
            self.assertTrue(os.path.exists(self.pipeline.path(name)), name)
        self.assertEqual(12, result["examples"])
        with open(self.pipeline.path(pipeline.BENCH)) as f:
            report = json.load(f)
        self.assertEqual(0.5, report["ffn_flops_ratio"])
        self.assertIn("routing_loads", report)

        teacher = checkpoint.load_checkpoint(
            self.pipeline.path(pipeline.TEACHER))
        table = importance.ImportanceTable.load(
            self.pipeline.path(pipeline.IMPORTANCE))
        self.assertEqual(table.digest(), teacher.metadata["importance"])
        self.assertEqual(pipeline.VOCAB, teacher.metadata["vocab"])
        records = utils.read_json_lines(self.pipeline.path(pipeline.METRICS))
        self.assertEqual(["teacher", "student"],
                         [r["phase"] for r in records])

    def test_adapt_needs_scored_teacher(self):
        self.pipeline.train_teacher()
        self.assertRaises(exception.MissingArtifact, self.pipeline.adapt)

    def test_adapt_rejects_other_table(self):
        teacher = self.pipeline.train_teacher()
        table = self.pipeline.score_importance(teacher)
        table.scores[0][0] += 1.0
        table.save(self.pipeline.path(pipeline.IMPORTANCE))
        self.assertRaises(exception.MissingArtifact, self.pipeline.adapt)

    def test_missing_checkpoint(self):
        self.assertRaises(exception.MissingArtifact, self.pipeline.evaluate)

    def read(self, path):
        with open(path, "rb") as f:
            return f.read()

    def again(self, output_dir=None):
        config = pipeline.RunConfig.from_dict(run_config())
        return pipeline.Pipeline(config.with_overrides(
            output_dir=output_dir or self.output_dir))

    def test_rerun_teacher_rewrites_metrics(self):
        self.pipeline.train_teacher()
        metrics = self.read(self.pipeline.path(pipeline.METRICS))
        teacher = self.read(self.pipeline.path(pipeline.TEACHER))
        self.again().train_teacher()
        self.assertEqual(metrics,
                         self.read(self.pipeline.path(pipeline.METRICS)))
        self.assertEqual(teacher,
                         self.read(self.pipeline.path(pipeline.TEACHER)))

    def test_rerun_distill_replaces_student_records(self):
        self.pipeline.run()
        self.again().distill()
        metrics = self.read(self.pipeline.path(pipeline.METRICS))
        self.again().distill()
        self.assertEqual(metrics,
                         self.read(self.pipeline.path(pipeline.METRICS)))
        records = utils.read_json_lines(self.pipeline.path(pipeline.METRICS))
        self.assertEqual(["teacher", "student"],
                         [r["phase"] for r in records])

    def test_scoring_leaves_input_teacher(self):
        self.pipeline.train_teacher()
        source = self.pipeline.path(pipeline.TEACHER)
        before = self.read(source)
        other = self.again(self.tempdir())
        table = other.score_importance(teacher_path=source)
        self.assertEqual(before, self.read(source))
        stamped = checkpoint.load_checkpoint(other.path(pipeline.TEACHER))
        self.assertEqual(table.digest(), stamped.metadata["importance"])
        student = other.adapt()
        self.assertEqual(table.digest(), student.metadata["importance"])

    def test_students_reference_vocab_and_table(self):
        self.pipeline.run()
        table = importance.ImportanceTable.load(
            self.pipeline.path(pipeline.IMPORTANCE))
        for name in (pipeline.ADAPTED, pipeline.STUDENT):
            model = checkpoint.load_checkpoint(self.pipeline.path(name))
            self.assertEqual(pipeline.VOCAB, model.metadata["vocab"], name)
            self.assertEqual(table.digest(), model.metadata["importance"],
                             name)
