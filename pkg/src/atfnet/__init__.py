"""Time/frequency-domain ensemble forecaster.

Submodules import lazily so the command-line entry point can cap BLAS thread
counts before numpy loads.
"""

__version__ = "0.1.0"

_SUBMODULES = (
    "cli",
    "cvnn",
    "data",
    "errors",
    "fblock",
    "figures",
    "model",
    "nn",
    "spectral",
    "tblock",
    "training",
    "weighting",
)


def __getattr__(name):
    if name in _SUBMODULES:
        import importlib

        return importlib.import_module(f".{name}", __name__)
    raise AttributeError(f"module {__name__!r} has no attribute {name!r}")


def __dir__():
    return sorted(list(globals()) + list(_SUBMODULES))
