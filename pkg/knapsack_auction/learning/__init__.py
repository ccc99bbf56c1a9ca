"""Tabular Q-learning bidders and the episode loop."""
