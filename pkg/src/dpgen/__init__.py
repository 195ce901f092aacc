"""Dropped-pronoun annotation and generation for Chinese-English MT."""

__version__ = "0.1.0"
