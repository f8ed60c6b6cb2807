"""Nonlinear dimensionality reduction by Gram-Schmidt over function families.

Extraction (GFR, GCA) returns linear directions; selection (GFS, GFA)
returns feature indices. UFFS is included as a slower reference selector.
"""

from .dataset import Dataset, Preprocessing, center, load_csv, save_csv, standardize
from .eigen import EigenPair, eigenpairs, pca, top_eigenpair
from .extract import ExtractionModel, gca, gfr, pca_model
from .family import FunctionFamily, Monomial, build, parse_family
from .orthogonalizer import NumericalError, OrthoBasis, ReducedMoments, extend, init, transform
from .select import SelectionModel, gfa, gfs, uffs
from .serialize import load as load_model, save as save_model

__version__ = "0.1.0"

__all__ = [
    "Dataset",
    "Preprocessing",
    "center",
    "standardize",
    "load_csv",
    "save_csv",
    "EigenPair",
    "eigenpairs",
    "pca",
    "top_eigenpair",
    "FunctionFamily",
    "Monomial",
    "build",
    "parse_family",
    "OrthoBasis",
    "ReducedMoments",
    "NumericalError",
    "init",
    "extend",
    "transform",
    "ExtractionModel",
    "gfr",
    "gca",
    "pca_model",
    "SelectionModel",
    "gfs",
    "gfa",
    "uffs",
    "load_model",
    "save_model",
]
