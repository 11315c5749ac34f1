"""
Ablation sweeps over the adaptation, routing and distillation choices.

An ablation definition is a YAML document naming studies; each study
varies one dotted key of the run configuration::

    studies:
        "Adaptation methods":
            axis: moe.adaptation
            values: [import, random, inverse]
            chart: bar

For every seed the teacher is trained and scored once (per distinct
teacher configuration) and reused by all variants.
"""

import dataclasses
import json
import logging
import os

from oslo_config import cfg
import yaml

from moedistill import exception
from moedistill import pipeline
import moedistill.renderer
from moedistill import utils

logger = logging.getLogger(__name__)

ablation_opts = [
    cfg.StrOpt('definition',
               default='etc/ablation.yaml',
               help='Ablation definition location.'),
    cfg.IntOpt('seeds',
               default=5,
               min=1,
               help='Number of seeds every variant is trained with.'),
]

CONF = cfg.CONF
CONF.register_opts(ablation_opts, group="ablation")

RESULTS = "ablation.json"
SECTIONS = ("moe", "distill")
TEACHER_SECTIONS = ("model", "teacher", "data")


def load_definition(path):
    if not os.path.exists(path):
        raise exception.PathNotFound(path=path)
    with open(path) as f:
        doc = yaml.safe_load(f) or {}
    if "studies" not in doc:
        raise exception.MissingSection(section="studies")
    for name, study in doc["studies"].items():
        for field in ("axis", "values"):
            if field not in study:
                raise exception.MissingSection(
                    section="studies.%s.%s" % (name, field))
        section = study["axis"].split(".")[0]
        if section not in SECTIONS + TEACHER_SECTIONS:
            raise exception.InvalidChoice(
                field="studies.%s.axis" % name, value=study["axis"],
                choices=", ".join(SECTIONS + TEACHER_SECTIONS))
    return doc


def apply_override(config, axis, value):
    """Copy of the run config with the dotted `axis` set to `value`."""
    section, _, key = axis.partition(".")
    current = getattr(config, section)
    if isinstance(current, dict):
        updated = dict(current)
        updated[key] = value
    else:
        if key not in set(f.name for f in dataclasses.fields(current)):
            raise exception.InvalidChoice(
                field=axis, value=key,
                choices=", ".join(f.name for f in dataclasses.fields(current)))
        updated = dataclasses.replace(current, **{key: value})
    return dataclasses.replace(config, **{section: updated})


class Ablation(object):
    """Runs every study of a definition over the configured seeds."""

    def __init__(self, config, definition=None, seeds=None):
        self.config = config
        self.definition = load_definition(definition or
                                          CONF.ablation.definition)
        self.seeds = seeds or self.definition.get("seeds",
                                                  CONF.ablation.seeds)
        self.output_dir = os.path.join(config.output_dir, "ablation")
        self.renderer = moedistill.renderer.Renderer()
        self._teachers = {}

    def _teacher(self, config):
        key = utils.sha256([dataclasses.asdict(getattr(config, s))
                            if dataclasses.is_dataclass(getattr(config, s))
                            else getattr(config, s)
                            for s in TEACHER_SECTIONS] + [config.seed])
        if key not in self._teachers:
            run = pipeline.Pipeline(dataclasses.replace(
                config, output_dir=os.path.join(self.output_dir, key[:12])))
            teacher = run.train_teacher()
            table = run.score_importance(teacher)
            self._teachers[key] = (run, teacher, table)
        return self._teachers[key]

    def run_variant(self, config):
        """Eval accuracy of one variant (one seed)."""
        run, teacher, table = self._teacher(config)
        adapted = run.adapt(teacher, table, moe_config=config.moe)
        student = run.distill(adapted, teacher,
                              distill_config=config.distill)
        return run.evaluate(student)["accuracy"]

    def run(self):
        results = {}
        for title, study in sorted(self.definition["studies"].items()):
            values = {}
            for value in study["values"]:
                accuracies = []
                for offset in range(self.seeds):
                    seed = self.config.seed + offset
                    config = apply_override(
                        self.config.with_overrides(seed=seed),
                        study["axis"], value)
                    accuracies.append(self.run_variant(config))
                    logger.info("%s: %s=%s seed %d accuracy %.4f", title,
                                study["axis"], value, seed, accuracies[-1])
                values[str(value)] = {
                    "mean": sum(accuracies) / len(accuracies),
                    "seeds": accuracies}
            results[title] = {"axis": study["axis"], "values": values}
            means = [values[str(v)]["mean"] for v in study["values"]]
            if study.get("chart") == "line":
                self.renderer.append_metric(
                    title, {"mean accuracy": means},
                    dict(study, x_labels=study["values"]))
            else:
                self.renderer.append_metric(
                    title, dict(zip(map(str, study["values"]), means)), study)
        return results

    def generate(self, results):
        if not os.path.isdir(self.output_dir):
            os.makedirs(self.output_dir)
        with open(os.path.join(self.output_dir, RESULTS), "w") as f:
            json.dump(results, f, sort_keys=True, indent=2)
        return self.renderer.render_to_file(
            os.path.join(self.output_dir, CONF.renderer.output_file))
