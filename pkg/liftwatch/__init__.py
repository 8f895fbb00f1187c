"""liftwatch: log-lift privacy watchdog mechanisms and experiments."""

__version__ = "0.1.0"
