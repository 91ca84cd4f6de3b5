"""Simulator for a timed calculus of moving, colliding and binding 3D shapes."""
__version__ = "0.1.0"
