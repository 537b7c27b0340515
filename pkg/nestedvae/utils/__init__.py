from .util import *
from .checkpoint import *
