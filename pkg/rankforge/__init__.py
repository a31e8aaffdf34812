"""Learning-to-rank with exact twin-sigmoid rank positions."""

__version__ = "1.0.0"
