"""
Run configuration and the stages of the compression pipeline.

A run configuration is a JSON (or YAML) document::

    {
      "seed": 0,
      "output_dir": "output",
      "model": {"embed_dim": 64, "ffn_hidden": 256, "layers": 4, ...},
      "moe": {"experts": 4, "shared_dim": 16, "routing": "hash_random",
              "adaptation": "import"},
      "teacher": {"lr": 0.001, "epochs": 10, "batch_size": 32},
      "distill": {"lambda_distill": 1.0, "layer_set": "all", ...},
      "data": {"synthetic": {"n_examples": 1000, "n_classes": 2,
                             "vocab_size": 200}},
      "bench": {"repeats": 5, "warmup": 2, "examples": 32}
    }

``data`` is either ``{"synthetic": {...}}`` or
``{"train": path, "eval": path, "has_header": false, "min_freq": 1}``;
relative paths are resolved against the configuration file.  Every stage
writes its artifacts to the output directory.
"""

import dataclasses
import json
import logging
import os

import yaml

from moedistill import adaptation
from moedistill import bench
from moedistill import checkpoint
from moedistill.data import dataset
from moedistill.data import synthetic
from moedistill.data import vocab as vocab_
from moedistill.distill import losses
from moedistill.distill import trainer
from moedistill import exception
from moedistill import importance
from moedistill.model import configuration
from moedistill import routing as routing_
from moedistill import utils

logger = logging.getLogger(__name__)

VOCAB = "vocab.json"
TEACHER = "teacher.ckpt"
IMPORTANCE = "importance.json"
ADAPTED = "adapted.ckpt"
STUDENT = "student.ckpt"
METRICS = "metrics.jsonl"
EVAL = "eval.json"
BENCH = "bench.json"

SYNTHETIC_DEFAULTS = {"n_examples": 1000, "n_classes": 2, "vocab_size": 200,
                      "signals_per_class": 4, "eval_fraction": 0.2}


def _build(cls, section, values):
    try:
        return cls(**(values or {}))
    except TypeError as e:
        raise exception.InvalidRunConfig(
            message="Invalid '%s' section: %s" % (section, e))


def _check_choice(field, value, choices):
    if value not in choices:
        raise exception.InvalidChoice(field=field, value=value,
                                      choices=", ".join(choices))


@dataclasses.dataclass
class RunConfig(object):
    model: configuration.ModelConfig
    moe: configuration.MoEConfig
    teacher: trainer.TrainConfig
    distill: trainer.DistillConfig
    data: dict
    bench: dict = dataclasses.field(default_factory=dict)
    seed: int = 0
    output_dir: str = "output"

    @classmethod
    def from_dict(cls, doc, base_dir="."):
        if not isinstance(doc, dict):
            raise exception.InvalidRunConfig(
                message="Run configuration must be a mapping")
        for section in ("model", "data"):
            if section not in doc:
                raise exception.MissingSection(section=section)
        unknown = set(doc) - set(f.name for f in dataclasses.fields(cls))
        if unknown:
            raise exception.InvalidRunConfig(
                message="Unknown sections: %s" % ", ".join(sorted(unknown)))

        model = dict(doc["model"])
        model.pop("moe", None)
        moe = _build(configuration.MoEConfig, "moe", doc.get("moe"))
        _check_choice("moe.routing", moe.routing,
                      configuration.ROUTING_STRATEGIES)
        _check_choice("moe.adaptation", moe.adaptation,
                      configuration.ADAPTATION_STRATEGIES)
        distill = _build(trainer.DistillConfig, "distill", doc.get("distill"))
        _check_choice("distill.layer_set", distill.layer_set,
                      losses.LAYER_SETS)

        config = cls(
            model=_build(configuration.ModelConfig, "model", model),
            moe=moe,
            teacher=_build(trainer.TrainConfig, "teacher",
                           doc.get("teacher")),
            distill=distill,
            data=cls._resolve_data(doc["data"], base_dir),
            bench=dict(doc.get("bench") or {}),
            seed=int(doc.get("seed", 0)),
            output_dir=doc.get("output_dir", "output"))
        config.model.with_moe(config.moe).validate()
        config.teacher.validate()
        config.distill.validate()
        return config.with_overrides()

    @staticmethod
    def _resolve_data(data, base_dir):
        data = dict(data or {})
        if "synthetic" in data:
            task = dict(SYNTHETIC_DEFAULTS)
            task.update(data["synthetic"] or {})
            return {"synthetic": task}
        if "train" not in data:
            raise exception.MissingSection(section="data.train")
        for key in ("train", "eval"):
            if data.get(key):
                path = os.path.join(base_dir, data[key])
                if not os.path.exists(path):
                    raise exception.PathNotFound(path=path)
                data[key] = path
        data.setdefault("has_header", False)
        data.setdefault("min_freq", 1)
        return data

    @classmethod
    def from_file(cls, path):
        if not os.path.exists(path):
            raise exception.PathNotFound(path=path)
        with open(path) as f:
            try:
                doc = yaml.safe_load(f)
            except yaml.YAMLError as e:
                raise exception.InvalidRunConfig(
                    message="Cannot parse %s: %s" % (path, e))
        logger.debug("Loaded run configuration %s: %s", path, doc)
        return cls.from_dict(doc, os.path.dirname(os.path.abspath(path)))

    def with_overrides(self, seed=None, output_dir=None):
        """Copy with flag overrides; the seed drives every training stage."""
        seed = self.seed if seed is None else seed
        return dataclasses.replace(
            self, seed=seed,
            output_dir=self.output_dir if output_dir is None else output_dir,
            teacher=dataclasses.replace(self.teacher, seed=seed),
            distill=dataclasses.replace(self.distill, seed=seed))

    def to_dict(self):
        return dataclasses.asdict(self)


class Pipeline(object):
    """Stages of one run, reading and writing the output directory."""

    def __init__(self, config):
        self.config = config
        self.output_dir = config.output_dir
        if not os.path.isdir(self.output_dir):
            os.makedirs(self.output_dir)
        self.metrics = utils.JSONLinesWriter(self.path(METRICS))
        self.vocab = None
        self.train = None
        self.evaluation = None

    def path(self, name):
        return os.path.join(self.output_dir, name)

    def model_config(self):
        return dataclasses.replace(self.config.model,
                                   vocab_size=len(self.vocab),
                                   num_labels=self.train.num_labels)

    def prepare_data(self):
        """Build the vocabulary and the encoded train/eval splits."""
        data = self.config.data
        if "synthetic" in data:
            task = data["synthetic"]
            train, evaluation, corpus = synthetic.gen_synthetic_task(
                self.config.seed, task["n_examples"], task["n_classes"],
                task["vocab_size"],
                signals_per_class=task["signals_per_class"],
                eval_fraction=task["eval_fraction"])
            min_freq = 1
        else:
            train = dataset.load_tsv(data["train"], data["has_header"])
            evaluation = None
            if data.get("eval"):
                evaluation = dataset.load_tsv(data["eval"],
                                              data["has_header"])
            corpus = train.texts()
            min_freq = data["min_freq"]
        self.vocab = vocab_.build_vocab(corpus, min_freq)
        self.vocab.save(self.path(VOCAB))
        max_len = self.config.model.max_seq_len
        self.train = train.encode(self.vocab, max_len)
        if evaluation is None:
            logger.warning("No evaluation split, evaluating on training data")
            self.evaluation = self.train
        else:
            self.evaluation = evaluation.encode(self.vocab, max_len,
                                                labels=train.labels)
        return self.train, self.evaluation

    def _ensure_data(self):
        if self.train is None:
            self.prepare_data()

    def load(self, path, artifact):
        if not os.path.exists(path):
            raise exception.MissingArtifact(artifact=artifact, path=path)
        return checkpoint.load_checkpoint(path)

    def train_teacher(self):
        self._ensure_data()
        self.metrics.truncate()
        teacher, _ = trainer.train_teacher(
            self.model_config(), self.config.teacher, self.train,
            self.evaluation, self.metrics)
        checkpoint.save_checkpoint(teacher, self.path(TEACHER), vocab=VOCAB)
        return teacher

    def score_importance(self, teacher=None, teacher_path=None):
        """Score the teacher's neurons and record the table's digest.

        The digest-stamped teacher is written to the output directory;
        the checkpoint read from `teacher_path` is left as it was.
        """
        self._ensure_data()
        teacher_path = teacher_path or self.path(TEACHER)
        if teacher is None:
            teacher = self.load(teacher_path, "teacher checkpoint")
        table = importance.accumulate_importance(teacher, self.train)
        table.save(self.path(IMPORTANCE))
        checkpoint.save_checkpoint(teacher, self.path(TEACHER), vocab=VOCAB,
                                   importance=table)
        return table

    def load_importance(self, teacher, teacher_path, importance_path=None):
        importance_path = importance_path or self.path(IMPORTANCE)
        if "importance" not in teacher.metadata:
            raise exception.MissingArtifact(artifact="importance table",
                                            path=teacher_path)
        if not os.path.exists(importance_path):
            raise exception.MissingArtifact(artifact="importance table",
                                            path=importance_path)
        table = importance.ImportanceTable.load(importance_path)
        if table.digest() != teacher.metadata["importance"]:
            raise exception.MissingArtifact(
                artifact="importance table scored for this teacher",
                path=importance_path)
        return table

    def adapt(self, teacher=None, table=None, teacher_path=None,
              importance_path=None, moe_config=None):
        self._ensure_data()
        teacher_path = teacher_path or self.path(TEACHER)
        if teacher is None:
            teacher = self.load(teacher_path, "teacher checkpoint")
        if table is None:
            table = self.load_importance(teacher, teacher_path,
                                         importance_path)
        student = adaptation.adapt_model(
            teacher, table, moe_config or self.config.moe,
            self.vocab.routing_frequencies(), self.config.seed)
        checkpoint.save_checkpoint(student, self.path(ADAPTED), vocab=VOCAB,
                                   importance=table)
        return student

    def distill(self, student=None, teacher=None, student_path=None,
                teacher_path=None, distill_config=None):
        self._ensure_data()
        if teacher is None:
            teacher_path = teacher_path or self.path(TEACHER)
            teacher = self.load(teacher_path, "teacher checkpoint")
        if student is None:
            student_path = student_path or self.path(ADAPTED)
            student = self.load(student_path, "adapted checkpoint")
        self.metrics.discard("phase", trainer.STUDENT)
        student, _ = trainer.train_student(
            student, teacher, distill_config or self.config.distill,
            self.train, self.evaluation, self.metrics)
        checkpoint.save_checkpoint(student, self.path(STUDENT), vocab=VOCAB)
        return student

    def evaluate(self, model=None, model_path=None):
        self._ensure_data()
        if model is None:
            model_path = model_path or self.path(STUDENT)
            model = self.load(model_path, "checkpoint")
        result = trainer.evaluate(model, self.evaluation)
        with open(self.path(EVAL), "w") as f:
            json.dump(result, f, sort_keys=True)
        logger.info("Eval accuracy %.4f over %d examples",
                    result["accuracy"], result["examples"])
        return result

    def bench(self, baseline=None, student=None, baseline_path=None,
              student_path=None):
        self._ensure_data()
        if baseline is None:
            baseline = self.load(baseline_path or self.path(TEACHER),
                                 "baseline checkpoint")
        if student is None:
            student = self.load(student_path or self.path(STUDENT),
                                "student checkpoint")
        options = dict((k, self.config.bench[k]) for k in
                       ("repeats", "warmup", "examples", "seq_len",
                        "threads")
                       if k in self.config.bench)
        report = bench.compare(baseline, student, self.evaluation, **options)
        if student.is_moe and student.routing.is_hash:
            loads, deviation = routing_.routing_loads(
                student.routing, self.vocab.routing_frequencies())
            report["routing_loads"] = {"loads": loads.tolist(),
                                       "max_deviation": deviation}
        with open(self.path(BENCH), "w") as f:
            json.dump(report, f, sort_keys=True, indent=2)
        return report

    def run(self):
        """All stages in order; returns the evaluation result."""
        self.prepare_data()
        teacher = self.train_teacher()
        table = self.score_importance(teacher)
        student = self.adapt(teacher, table)
        student = self.distill(student, teacher)
        result = self.evaluate(student)
        self.bench(teacher, student)
        return result
