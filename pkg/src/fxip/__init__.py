"""FX option pricing under an intermediate pseudo-currency numeraire."""

from ._backend import BACKEND

__all__ = ["BACKEND"]
__version__ = "0.1.0"
