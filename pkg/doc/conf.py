# moedistill documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('..'))

extensions = ['sphinx.ext.autodoc']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'moedistill'
copyright = u'2026, moedistill developers'
version = '0.1'
release = '0.1'

exclude_patterns = ['_build']
pygments_style = 'sphinx'

html_theme = 'default'
html_static_path = []
htmlhelp_basename = 'moedistilldoc'

latex_documents = [
    ('index', 'moedistill.tex', u'moedistill Documentation',
     u'moedistill developers', 'manual'),
]

man_pages = [
    ('index', 'moedistill', u'moedistill Documentation',
     [u'moedistill developers'], 1)
]
