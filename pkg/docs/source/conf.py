# qdselect documentation build configuration file.

import os
import sys

sys.path.insert(0, os.path.abspath('../..'))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax'
]

napoleon_numpy_docstring = True
napoleon_include_private_with_doc = False
napoleon_include_special_with_doc = False
napoleon_use_param = True
napoleon_use_rtype = True

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'qdselect'
copyright = '2026, Noah Waterfield Price'
author = 'Noah Waterfield Price'
version = '0.1'
release = '0.1'

exclude_patterns = []
pygments_style = 'colorful'

html_theme = "sphinx_rtd_theme"
html_static_path = ['_static']
htmlhelp_basename = 'qdselectdoc'

latex_documents = [
    (master_doc, 'qdselect.tex', 'qdselect Documentation',
     'Noah Waterfield Price', 'manual'),
]

man_pages = [
    (master_doc, 'qdselect', 'qdselect Documentation', [author], 1)
]
