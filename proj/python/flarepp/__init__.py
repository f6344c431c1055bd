"""Python bindings for the flarepp C++ library."""

from ._flarepp import *  # noqa: F401,F403
from ._flarepp import __version__  # noqa: F401
