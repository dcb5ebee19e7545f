from . import network
from .gridded import *
from .network import NNParams, init_from_structured
from .structured import *
