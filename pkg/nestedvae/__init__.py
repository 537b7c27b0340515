from . import (
    autograd,
    layers,
    optim,
    models,
    datasets,
    metrics,
    utils,
)

__version__ = '0.1.0'
