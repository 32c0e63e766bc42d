"""A small float64 tensor library with tape-based reverse-mode differentiation, the layers the
deformation networks need and an AdamW optimizer."""
