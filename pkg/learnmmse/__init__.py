from .channel import *
from .errors import *
from .lmmse import *
from .training import TrainConfig

from .version import __version__, version, VERSION
