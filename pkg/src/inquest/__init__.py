"""Toolkit for anchored inquisitive questions: generation, salience
prediction, annotation collection, agreement metrics, and salience-based
summary scoring."""

__version__ = "0.1.0"
