"""grainspect: wood surface defect detection and classification.

Pipeline: color bands -> gradient magnitude / LoG response -> support
regions -> boundary curves -> structural and conditional statistical
features per 60x60 window -> hierarchical Gaussian Bayes classification.
"""

from .backend import BACKEND

__version__ = "0.1.0"

__all__ = ["BACKEND", "__version__"]
