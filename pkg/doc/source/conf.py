# tripletsim documentation build configuration file.
import os
import sys

sys.path.append(os.path.abspath("../.."))

extensions = [
    'sphinx.ext.autodoc',
    'sphinx.ext.todo',
    'sphinx.ext.mathjax',
    'sphinx.ext.intersphinx',
    'sphinxcontrib.apidoc'
]

apidoc_module_dir = '../../tripletsim'
apidoc_output_dir = 'reference/api'
apidoc_excluded_paths = ['_version.py']

todo_include_todos = True

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = 'tripletsim'
copyright = '2024, tripletsim contributors'

import tripletsim
release = tripletsim.__version__
version = '.'.join(release.split('.')[:2])

exclude_patterns = ['_build']
pygments_style = 'sphinx'

intersphinx_mapping = {
    'python': ('https://docs.python.org/3/', None),
    'numpy': ('https://numpy.org/doc/stable/', None),
    'scipy': ('https://docs.scipy.org/doc/scipy/', None),
    'eventlet': ('https://eventlet.readthedocs.io/en/latest/', None),
}

html_theme = 'default'
htmlhelp_basename = 'tripletsimdoc'
