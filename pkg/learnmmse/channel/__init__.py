from .bessel import bessel_j0
from .model import *
