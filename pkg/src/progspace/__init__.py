"""Progression-space modelling of longitudinal clinical data.

Rank-2 NMF builds a two-axis progression space, a BIC-selected Gaussian
mixture carves patients into low/moderate/high progression zones, and a
random forest predicts each subject's zone at a future visit.
"""

__version__ = "0.1.0"
