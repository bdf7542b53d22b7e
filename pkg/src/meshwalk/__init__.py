"""Progressive-mesh streaming walkthrough simulator."""
__version__ = "0.1.0"
