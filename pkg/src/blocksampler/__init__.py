"""Bayesian zero-inflated stochastic block models for weighted networks."""
