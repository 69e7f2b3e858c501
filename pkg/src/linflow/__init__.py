"""Imploid-valued flows on rooted 3-valent maps and linear lambda terms."""
__version__ = "0.1.0"
