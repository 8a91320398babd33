from . import definitions
from . import functions
