"""Inter-procedural two-variable Herbrand equality inference."""

__version__ = "0.1.0"
