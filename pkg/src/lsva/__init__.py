"""Asymptotic prices and implied volatilities for local-stochastic volatility models."""

from .blackscholes import BsQuote, bs_price, implied_vol
from .ivexpansion import IvExpansion, QueryPoint, density_approx, expand, implied_vol_approx
from .models import CEV, SABR, ConstantVol, Heston, ThreeHalves, model_from_dict
from .timefunc import ExpPoly

__all__ = [
    "BsQuote", "CEV", "ConstantVol", "ExpPoly", "Heston", "IvExpansion", "QueryPoint", "SABR",
    "ThreeHalves", "bs_price", "density_approx", "expand", "implied_vol", "implied_vol_approx",
    "model_from_dict",
]

__version__ = "0.1.0"
