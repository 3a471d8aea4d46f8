"""Stochastic proximal plug-and-play solvers with analytic GMM denoisers."""

from ._snorelab import (
    ConfigError,
    Fidelity,
    GmmDenoiser,
    GmmPrior,
    __version__,
    bound_constants,
    counterexample,
    gaussian_draw,
    max_step,
    philox4x32,
    prox_oracle,
    run,
    verify,
)

__all__ = [
    "ConfigError",
    "Fidelity",
    "GmmDenoiser",
    "GmmPrior",
    "__version__",
    "bound_constants",
    "counterexample",
    "gaussian_draw",
    "max_step",
    "philox4x32",
    "prox_oracle",
    "run",
    "verify",
]
