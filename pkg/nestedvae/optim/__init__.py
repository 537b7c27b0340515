from .adam import *
