"""
Domain types.

Everything here is immutable after construction and safe to share between threads.
"""
