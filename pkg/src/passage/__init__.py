"""Sheet-recursion engine for 3-pile Nim and 3-row Chomp, with a pass and with generic perturbations."""

__version__ = "0.1.0"
