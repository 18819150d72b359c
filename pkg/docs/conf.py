# Configuration file for the Sphinx documentation builder.
#
# https://www.sphinx-doc.org/en/master/usage/configuration.html

import os
import re
import sys

ROOT = os.path.abspath(os.path.join(os.path.dirname(__file__), ".."))
sys.path.insert(0, ROOT)

# -- Project information -----------------------------------------------------

project = 'CapState'
copyright = '2025-2026, Grigory Sharov'
author = 'Grigory Sharov'

# single source: capstate/__init__.py
with open(os.path.join(ROOT, "capstate", "__init__.py"), encoding="utf-8") as f:
    release = re.search(r"__version__ = '([^']+)'", f.read()).group(1)
version = release

# -- General configuration ---------------------------------------------------
needs_sphinx = '8.0'

# autodoc imports capstate, see docs/requirements.txt
extensions = ['sphinx.ext.autodoc']
autodoc_member_order = 'bysource'
autodoc_typehints = 'description'
autodoc_default_options = {'members': True, 'undoc-members': False}

source_suffix = {'.rst': 'restructuredtext'}
master_doc = 'index'
language = 'en'
exclude_patterns = ['_build']
pygments_style = 'sphinx'

# -- Options for HTML output -------------------------------------------------

html_theme = 'sphinx_rtd_theme'
html_theme_options = {'sticky_navigation': False, 'collapse_navigation': False, 'navigation_depth': 2}
html_title = f"CapState {release}"
