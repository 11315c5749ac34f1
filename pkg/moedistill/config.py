import logging

from oslo_config import cfg

opts = [
    cfg.BoolOpt('debug',
                default=False,
                help='Log at DEBUG level.'),
]

CONF = cfg.CONF
CONF.register_cli_opts(opts)


def parse_args(argv, default_config_files=None):
    cfg.CONF(argv[1:],
             project='moedistill',
             default_config_files=default_config_files)


def setup_logging():
    level = logging.DEBUG if CONF.debug else logging.INFO
    logging.basicConfig(
        level=level,
        format="%(asctime)s %(levelname)s %(name)s: %(message)s")
