"""Edge DNS interception for a 5G user plane, with a simulator to measure it."""

__version__ = "0.1.0"
