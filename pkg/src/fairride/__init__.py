"""Ride-sharing dispatch simulation with fairness analytics and a serving layer."""

__version__ = "0.1.0"
