"""Segmentation, body, apparel and refinement networks."""
