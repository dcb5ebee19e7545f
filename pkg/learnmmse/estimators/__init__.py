from .cnn import *
from .omp import *
