# Sphinx configuration for the wavedof documentation.
# Build with `sphinx-build -b html docs docs/_build` from the repository root.
import os
import sys
sys.path.insert(0, os.path.abspath('../'))

import wavedof

# -- Project ------------------------------------------------------------------
project = 'wavedof'
copyright = '2026, wavedof developers'
author = 'wavedof developers'
version = release = wavedof.__version__

# -- Sources ------------------------------------------------------------------
# README.md is the user guide, apidoc/ holds one automodule page per module
extensions = ['myst_parser', 'sphinx.ext.autodoc', 'sphinx.ext.autosummary', 'sphinx.ext.mathjax']
source_suffix = ['.rst', '.md']
myst_enable_extensions = ['dollarmath']
exclude_patterns = ['_build', 'Thumbs.db', '.DS_Store']

# docstrings use the :param: / :return: fields
autodoc_member_order = 'bysource'
autodoc_default_options = {'members': True, 'undoc-members': True, 'show-inheritance': True}

# -- HTML ---------------------------------------------------------------------
html_theme = 'sphinx_rtd_theme'
html_title = f'wavedof {release}'
