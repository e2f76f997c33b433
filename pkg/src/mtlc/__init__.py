"""Desk-scale multi-task text classification.

A small transformer encoder trained from scratch on sentiment analysis and
offensive-language identification, jointly or separately, with selectable
loss functions and a full precision/recall/F1 reporting suite.
"""

__version__ = "0.1.0"
