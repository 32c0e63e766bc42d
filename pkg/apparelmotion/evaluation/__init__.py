"""Quantitative evaluation of predicted animations against ground truth."""
