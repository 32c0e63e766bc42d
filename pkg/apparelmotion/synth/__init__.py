"""Procedural rigged characters, motions and a mass-spring apparel oracle."""
