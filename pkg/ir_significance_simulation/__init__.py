"""
IR Significance Simulation

Simulation of the type-I error and power of paired significance tests used
in information retrieval evaluation. Synthetic runs are drawn from
log-normal score distribution models fitted to TREC system runs.
"""

__version__ = "0.1.0"
__author__ = "IR Significance Simulation Team"

from .core import *
from .models import *
