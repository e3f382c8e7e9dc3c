# On-disk cache package
from .cache import DlogCache, BatchCache

__all__ = ['DlogCache', 'BatchCache']
