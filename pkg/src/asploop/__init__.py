"""Solver-in-the-loop tooling for ASP encodings of grid logic puzzles.

The package covers the full loop: a parser/grounder/enumerator for the
encoding fragment those puzzles use, a solver gateway with an external
clingo-compatible backend, answer matching against ground truths, the
reward function, stepwise trajectory construction with pluggable candidate
generators, DFS training-data generation, best-of-N search with
regeneration and backtracking, and a CLI tying it together.
"""

__version__ = "0.1.0"
