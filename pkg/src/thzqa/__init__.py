"""No-reference quality assessment for passive THz security images.

Metrics live in :mod:`thzqa.metrics`, synthetic data in :mod:`thzqa.synth`,
statistics in :mod:`thzqa.evaluation` and the quality gate in
:mod:`thzqa.classify`.
"""

__version__ = "0.1.0"
