"""Stable module categories over finite Margolis Hopf algebras over F_2."""
from . import gmod, hopf, linalg2, localize, margolis, picard, spectrum, stable
from .gmod import GradedModule, ModuleMap
from .hopf import HopfAlgebra, preset

__all__ = ["gmod", "hopf", "linalg2", "localize", "margolis", "picard", "spectrum", "stable",
           "GradedModule", "ModuleMap", "HopfAlgebra", "preset"]
__version__ = "0.1.0"
