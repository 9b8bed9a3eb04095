"""Exceptional-motion scoring of VR video content.

A convolutional autoencoder learns to reconstruct 5-frame windows of
"normal motion" video; reconstruction error on new footage yields a
per-frame exceptional-motion score. The package also scores simulator
sickness questionnaires and correlates the two signals.
"""

from .kernels import backend_name

__version__ = "0.1.0"

__all__ = ["backend_name", "__version__"]
