"""Conversational flight-information engine over a tabular flight dataset."""

__version__ = "0.1.0"
