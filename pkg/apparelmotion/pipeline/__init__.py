"""Training, inference and ablation drivers over a synthetic corpus."""
