"""Hybrid preference/influence collaborative filtering on coupled social networks."""

__version__ = "0.1.0"
