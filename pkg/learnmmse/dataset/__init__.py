from .channel_file import *
from .streams import *
from .synthetic import *
