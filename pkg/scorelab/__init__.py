"""
scorelab: proper scoring rules, minimum-score estimation and score-based model comparison.
"""

__version__ = "0.3.0"
