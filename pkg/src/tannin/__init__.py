"""Wine-quality analysis and 1D-CNN classification, from scratch on numpy."""

__version__ = "0.1.0"
