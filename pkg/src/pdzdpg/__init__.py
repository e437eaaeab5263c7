"""Model-free primal-dual learning for constrained wireless resource allocation.

The package trains deterministic power-allocation policies with zeroth-order
(action-space or parameter-space) gradient estimates obtained from system
probes, alongside model-based baselines and an experiment harness.
"""

__version__ = "0.1.0"
