"""
Sharp partial ordering of dynamic treatment regimes.
"""
__version__ = "1.0.0"
