"""Parametric arm families and their index policies."""

FAMILIES = ("pareto", "coverage", "interval", "normal_chk", "normal_var", "normal_thr")
