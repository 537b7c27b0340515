from .vae import *
from .nested_vae import *
from .architectures import *
