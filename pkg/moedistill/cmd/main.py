"""The ``moedistill`` command line.

Usage::

    moedistill [--debug] <command> --config run.json [--seed N]
               [--output-dir DIR] [command options]
"""

import logging
import sys

from oslo_config import cfg

from moedistill import ablation
import moedistill.config
from moedistill import exception
from moedistill import pipeline

CONF = cfg.CONF

logger = logging.getLogger(__name__)


def _run(args):
    config = pipeline.RunConfig.from_file(args.config)
    config = config.with_overrides(seed=args.seed,
                                   output_dir=args.output_dir)
    return pipeline.Pipeline(config)


def train_teacher(args):
    _run(args).train_teacher()


def score_importance(args):
    _run(args).score_importance(teacher_path=args.teacher)


def adapt(args):
    _run(args).adapt(teacher_path=args.teacher,
                     importance_path=args.importance)


def distill(args):
    _run(args).distill(student_path=args.student, teacher_path=args.teacher)


def evaluate(args):
    _run(args).evaluate(model_path=args.checkpoint)


def bench(args):
    _run(args).bench(baseline_path=args.baseline,
                     student_path=args.checkpoint)


def run_pipeline(args):
    _run(args).run()


def ablate(args):
    run = _run(args)
    study = ablation.Ablation(run.config, definition=args.definition,
                              seeds=args.seeds)
    study.generate(study.run())


# name -> (handler, help, extra options)
COMMANDS = [
    ("train-teacher", train_teacher, "Fine-tune the dense teacher.", []),
    ("importance", score_importance, "Score the teacher's FFN neurons.",
     ["teacher"]),
    ("adapt", adapt, "Split the teacher's FFNs into experts.",
     ["teacher", "importance"]),
    ("distill", distill, "Train the MoE student against the teacher.",
     ["teacher", "student"]),
    ("eval", evaluate, "Evaluate a checkpoint on the evaluation split.",
     ["checkpoint"]),
    ("bench", bench, "Compare inference cost of a baseline and a student.",
     ["baseline", "checkpoint"]),
    ("pipeline", run_pipeline, "Run every stage in order.", []),
    ("ablate", ablate, "Run the ablation studies of a definition.",
     ["definition", "seeds"]),
]

EXTRA_OPTIONS = {
    "teacher": ("--teacher", {"help": "Teacher checkpoint."}),
    "importance": ("--importance", {"help": "Importance table JSON."}),
    "student": ("--student", {"help": "Adapted student checkpoint."}),
    "checkpoint": ("--checkpoint", {"help": "Checkpoint to use."}),
    "baseline": ("--baseline", {"help": "Dense baseline checkpoint."}),
    "definition": ("--definition", {"help": "Ablation definition."}),
    "seeds": ("--seeds", {"type": int, "help": "Seeds per variant."}),
}


def add_command_parsers(subparsers):
    for name, handler, help_text, extra in COMMANDS:
        parser = subparsers.add_parser(name, help=help_text)
        parser.add_argument("--config", required=True,
                            help="Run configuration (JSON or YAML).")
        parser.add_argument("--seed", type=int,
                            help="Override the configuration's seed.")
        parser.add_argument("--output-dir", dest="output_dir",
                            help="Override the output directory.")
        for option in extra:
            flag, kwargs = EXTRA_OPTIONS[option]
            parser.add_argument(flag, **kwargs)
        parser.set_defaults(handler=handler)


command_opt = cfg.SubCommandOpt('command',
                                title='Commands',
                                help='Available commands',
                                handler=add_command_parsers)

CONF.register_cli_opt(command_opt)


def cli_main(argv):
    """Run the command in `argv` (program name first); returns exit code."""
    try:
        moedistill.config.parse_args(argv, default_config_files=[])
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    moedistill.config.setup_logging()
    try:
        CONF.command.handler(CONF.command)
    except exception.MoEDistillException as e:
        logger.error("%s failed: %s", CONF.command.name, e)
        return 1
    return 0


def main():
    sys.exit(cli_main(sys.argv))


if __name__ == "__main__":
    main()
