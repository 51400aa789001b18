"""Individualized take-a-break policies for recommender feeds."""

try:
    from ._core import *  # installed wheel: extension lives inside the package
    from ._core import __version__
except ImportError:  # in-tree build: extension sits next to the package on sys.path
    from _core import *
    from _core import __version__
