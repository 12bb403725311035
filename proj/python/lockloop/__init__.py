"""Cascade-locked laser frequency-noise simulator and analysis toolkit."""

from lockloop._core import *  # noqa: F401,F403
from lockloop._core import __doc__ as _core_doc

__doc__ = _core_doc
__version__ = "0.1.0"
