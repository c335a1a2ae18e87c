from .consts import Const
from .errors import SetnetError, format_exception

__all__ = ["Const", "SetnetError", "format_exception"]
__version__ = "0.1.0"
