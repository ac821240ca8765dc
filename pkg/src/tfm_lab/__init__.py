"""Soft second-price transaction fee mechanisms: allocation, payments, audits and searches."""

__version__ = "0.1.0"

from .dists import ValuationDistribution
from .mech_core import Mechanism, MechanismParams, myerson_payment
from .ssp_k import SoftSecondPriceK, alloc_exact, make_mechanism
from .ssp_k1 import SoftSecondPriceK1, alloc_k1, pay_k1

__all__ = [
    "Mechanism",
    "MechanismParams",
    "SoftSecondPriceK",
    "SoftSecondPriceK1",
    "ValuationDistribution",
    "alloc_exact",
    "alloc_k1",
    "make_mechanism",
    "myerson_payment",
    "pay_k1",
]
