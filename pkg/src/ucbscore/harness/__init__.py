"""Experiment configuration, simulation and reporting."""
