"""Utility-guided real-time search on sliding-tile puzzles.

Exact and on-line (Minimin) solvers, multiattribute utility scoring of
solution outcomes, and expected-utility selection of the lookahead depth
driven by a Markov or empirical performance model.
"""

__version__ = "0.1.0"
