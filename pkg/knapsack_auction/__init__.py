"""
Knapsack auction simulation and verification engine.

Greedy allocation with uniform-price, discriminatory, generalized second
price and VCG payments, a brute-force theory oracle, a numerical solver for
the discriminatory-price Bayes-Nash bid function and tabular Q-learning
bidders.
"""

__version__ = "1.0.0"
