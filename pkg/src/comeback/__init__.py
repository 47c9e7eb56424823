"""Comeback-researcher analysis: citation graphs, communities, career cohorts,
bridging and gap-entropy metrics, statistics and classifiers."""

__version__ = "0.1.0"
