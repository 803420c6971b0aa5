"""Delay-aware transfer-function analysis of electric power steering dynamics."""
__version__ = "0.1.0"
