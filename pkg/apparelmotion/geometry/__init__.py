"""Mesh, skeleton and motion data model, geodesic distances and retargeting primitives."""
