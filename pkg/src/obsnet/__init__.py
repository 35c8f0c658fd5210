"""Dynamic task replanning across heterogeneous Earth-observation resources."""
__version__ = "0.1.0"
