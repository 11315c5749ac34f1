from oslo_config import cfg

from moedistill import utils

CONF = cfg.CONF

renderer_opts = [
    cfg.StrOpt('renderer_class',
               default='moedistill.renderer.chart.Chart',
               help='The full class name of the renderer used for '
                    'ablation results.'),
    cfg.StrOpt('output_file',
               default='ablation.svg',
               help='Chart output file, relative to the output directory.'),
]

CONF.register_opts(renderer_opts, group="renderer")


def Renderer():
    cls = utils.import_class(CONF.renderer.renderer_class)
    return cls()
