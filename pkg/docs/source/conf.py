# -*- coding: utf-8 -*-

import sys
import os
import re

sys.path.insert(0, os.path.abspath('../..'))  # Source code dir relative to this file

from nestedvae import __version__


# -- Project information -----------------------------------------------------
project = u'NestedVAE'
slug = re.sub(r'\W+', '-', project.lower())
version = __version__
release = __version__
author = 'NestedVAE developers'
copyright = '2024, NestedVAE developers'
language = 'en'


# -- General configuration ---------------------------------------------------
extensions = [
    'sphinx.ext.intersphinx',
    'sphinx.ext.autodoc',
    'sphinx.ext.coverage',
    'sphinx.ext.napoleon',
    'sphinx.ext.mathjax',
    'sphinx.ext.viewcode',
    'sphinx_rtd_theme',
    'sphinx_autodoc_typehints',
]

source_suffix = ['.rst', '.md']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

master_doc = 'index'
pygments_style = 'default'

intersphinx_mapping = {
    'python': ('https://docs.python.org/3/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
}

# -- Options for HTML output -------------------------------------------------
html_theme = 'sphinx_rtd_theme'
html_theme_options = {
    'navigation_depth': 5,
}
html_show_sourcelink = True
htmlhelp_basename = slug

latex_documents = [
  ('index', '{0}.tex'.format(slug), project, author, 'manual'),
]

man_pages = [
    ('index', slug, project, [author], 1)
]
