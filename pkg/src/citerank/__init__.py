"""Citation metrics, fits and rankings built around the h- and o-indices."""

__version__ = "0.1.0"
