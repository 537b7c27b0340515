from .parity import *
from .forest import *
from .change_detection import *
from .projection import *
from .report import *
