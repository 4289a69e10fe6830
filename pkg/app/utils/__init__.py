"""Numerical kernels, seeding and result file helpers."""
