"""Event-style machines as structured specifications over bounded domains."""

__version__ = "0.1.0"
