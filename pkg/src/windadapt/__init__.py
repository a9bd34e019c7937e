"""Domain-adaptive wind power class prediction toolkit."""

__version__ = "0.1.0"
