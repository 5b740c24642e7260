"""Log-weakened critical norms, dyadic shell calculus and a pseudospectral
Navier-Stokes solver with numerical checks of high-frequency energy estimates."""

__version__ = "0.1.0"

from supercrit.kernels import BACKEND  # noqa: E402

__all__ = ["__version__", "BACKEND"]
