from ._specmatch import *  # noqa: F401,F403
from ._specmatch import __doc__  # noqa: F401

__version__ = "0.1.0"
