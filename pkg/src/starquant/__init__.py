"""starquant: exact Fedosov star products, Cahen-Gutt moment-map geometry,
and Berezin-Toeplitz numerics at desk scale."""

from .gaussrat import GaussianRational
from .trigpoly import TrigPoly, TorusRing, torus_integrate, poisson_solve, laplacian
from .nuseries import NuSeries
from .epsjet import EpsJet, JetRing, jet_invert
from .symplectic import SymplecticStructure, FormPoly, Geometry
from .weyl import WeylFormSection, moyal_star_flat, poisson_bracket_flat

__all__ = [
    "GaussianRational", "TrigPoly", "TorusRing", "torus_integrate",
    "poisson_solve", "laplacian", "NuSeries", "EpsJet", "JetRing",
    "jet_invert", "SymplecticStructure", "FormPoly", "Geometry",
    "WeylFormSection", "moyal_star_flat", "poisson_bracket_flat",
]
