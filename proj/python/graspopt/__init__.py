"""Grasp-pose optimization toolkit (Python bindings of the C++ core)."""
import os as _os

_here = _os.path.dirname(__file__)
if "GRASPOPT_CONFIG_DIR" not in _os.environ and _os.path.isdir(_os.path.join(_here, "configs")):
    _os.environ["GRASPOPT_CONFIG_DIR"] = _os.path.join(_here, "configs")

from ._core import *  # noqa: E402,F401,F403
from ._core import __version__  # noqa: E402,F401
