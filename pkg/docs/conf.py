# Sphinx configuration for the hmftools documentation.
# https://www.sphinx-doc.org/en/master/usage/configuration.html

project = "hmftools"
copyright = "2026, hmftools developers"
author = "hmftools developers"

extensions = [
    "sphinx.ext.autodoc",
    "sphinx.ext.mathjax",
    "sphinx_click.ext",
]

autodoc_member_order = "bysource"
autodoc_default_options = {"members": True, "show-inheritance": True}

templates_path = ["_templates"]
exclude_patterns = ["_build", "Thumbs.db", ".DS_Store"]

html_theme = "default"
html_static_path = ["_static"]
