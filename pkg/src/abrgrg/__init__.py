"""Aldous-Broder chains, ghost-index skeletons and root growth with
re-grafting: simulation, exact small-instance checks and estimators."""

__version__ = "0.1.0"
