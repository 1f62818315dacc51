"""Tree-growing kernel selection: compiled extension with pure-python fallback.

Set POVBENCH_PURE_PYTHON=1 to force the fallback. Both backends grow
identical trees; the compiled one is just fast.
"""

import os

from . import py_tree

if os.environ.get("POVBENCH_PURE_PYTHON"):
    _impl = py_tree
    BACKEND = "python"
else:
    try:
        from . import _ctree as _impl
        BACKEND = "cython"
    except ImportError:
        _impl = py_tree
        BACKEND = "python"

build_tree = _impl.build_tree
