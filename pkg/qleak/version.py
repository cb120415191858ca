# GENERATED VERSION FILE
# TIME: Sun Oct 18 23:51:39 2026
__version__ = '0.1.0'
__gitsha__ = 'unknown'
version_info = (0, 1, 0)
