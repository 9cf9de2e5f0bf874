"""Ear verification: GMM color slice regions + SIFT keypoint matching."""

try:
    # wheel layout: the extension is installed inside the package
    from ._earsift import *  # noqa: F401,F403
except ImportError:
    # build-tree layout: the extension sits on sys.path
    from _earsift import *  # noqa: F401,F403

__version__ = "0.1.0"
