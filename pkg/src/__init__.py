from src.constants import VERSION

__version__ = VERSION
