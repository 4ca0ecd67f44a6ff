"""Joint belief-tracking and response-selection dialog models."""

__version__ = "0.1.0"
