"""L-functions of one-variable exponential sums over finite fields.

Two independent routes to L(f; T): exact character sums in Z[zeta_p] and
Dwork's p-adic Frobenius matrix.  Both feed exact Newton polygons, compared
with the Hodge polygon and the asymptotic generic Newton polygon.
"""
from .charsum import CycInt, MonicPoly, l_polynomial, np_oracle
from .dwork import FrobeniusData, dwork_l_function, fdagger, frobenius_F, nabla_reduce
from .errors import Finding, PrecisionError, ResourceGuard
from .gnp import epsilon_n, gnp_polygon, membership, residue_table, t_n
from .padic import PadicElem, PadicMatrix, Tower, make_tower
from .polygon import Polygon, hodge_polygon, lies_above, lower_hull
from .semilinear import delta_eta, triangularize, verify_np_theorem

__all__ = [
    "CycInt", "MonicPoly", "l_polynomial", "np_oracle",
    "FrobeniusData", "dwork_l_function", "fdagger", "frobenius_F", "nabla_reduce",
    "Finding", "PrecisionError", "ResourceGuard",
    "epsilon_n", "gnp_polygon", "membership", "residue_table", "t_n",
    "PadicElem", "PadicMatrix", "Tower", "make_tower",
    "Polygon", "hodge_polygon", "lies_above", "lower_hull",
    "delta_eta", "triangularize", "verify_np_theorem",
]
