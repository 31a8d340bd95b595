# RDMC documentation build configuration file

import rdmc

extensions = ['sphinx.ext.autodoc', 'sphinx.ext.intersphinx']

templates_path = ['_templates']
source_suffix = '.rst'
master_doc = 'index'

project = u'RDMC'
copyright = u'The RDMC developers'

version = rdmc.version
release = rdmc.release

exclude_trees = ['_build', 'build', '.tox', '.git', 'configs']
pygments_style = 'sphinx'
autodoc_member_order = 'alphabetical'

html_theme = 'sphinx_rtd_theme'
htmlhelp_basename = 'RDMCdoc'

latex_documents = [
  ('index', 'RDMC.tex', u'RDMC Documentation', u'The RDMC developers', 'manual'),
]

intersphinx_mapping = {'python': ('https://docs.python.org/', None),
                       'numpy': ('https://numpy.org/doc/stable/', None),
                       'pandas': ('https://pandas.pydata.org/docs/', None)}
