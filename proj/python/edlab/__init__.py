"""Entropic dynamics laboratory.

Spectral Schrodinger solvers on periodic grids, best-matching shift
extraction, stochastic walker ensembles, and the maximum-entropy transition
kernel, backed by the C++ core.
"""

try:
    from ._edlab import *  # noqa: F401,F403  (installed layout)
    from ._edlab import __version__  # noqa: F401
except ImportError:  # pragma: no cover - build-tree layout
    from _edlab import *  # noqa: F401,F403
    from _edlab import __version__  # noqa: F401
