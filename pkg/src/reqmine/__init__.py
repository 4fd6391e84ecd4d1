"""Mine requirement sentences from forum communication about an event."""

__version__ = "0.1.0"
