"""Sequential reference algorithms and verifiers."""
