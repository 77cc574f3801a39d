"""Semi-supervised classification with a Neumann heat kernel manifold penalty."""
