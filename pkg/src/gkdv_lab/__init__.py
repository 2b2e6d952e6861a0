"""Numerical lab for soliton dynamics in slowly varying generalized KdV media."""
