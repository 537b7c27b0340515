from .base import *
from .idx import *
from .rotated_mnist import *
from .pairing import *
from .canm import *
from .container import *
