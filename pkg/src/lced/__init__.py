"""Low-carbon economic dispatch with Pareto frontiers and Nash bargaining."""

__version__ = "0.1.0"
