"""Incentive checks, counterexample searches and the discriminatory-price equilibrium solver."""
