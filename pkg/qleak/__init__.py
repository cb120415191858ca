# flake8: noqa
from .adversary import *
from .archs import *
from .data import *
from .defense import *
from .losses import *
from .metrics import *
from .models import *
from .ops import *
from .refinery import *
from .utils import *
from .version import __gitsha__, __version__
