"""Multiscale medial axis maps from quadratic lower transforms of squared distance."""
