"""Certifying small MinMax networks on a 2-D corner task.

Trains and certifies Lipschitz-bounded networks, compares certified regions
against exact robust regions, and quantifies how piecewise-linear level
curves miss robust points near corners of the decision boundary.
"""

__version__ = "0.1.0"
