"""Frobenius matrix from the Dwork side, checked against the character-sum L-polynomial."""
from expsum.charsum import MonicPoly, np_oracle
from expsum.dwork import FrobeniusData
from expsum.padic import certified_polygon

f = MonicPoly.from_ints(11, 1, [0, 3, 1, 4])
D = FrobeniusData(f)
print("f coefficients:", f.coeffs, "over F_11, working digits", D.T.N)
print("trace formula:", D.compare_with_oracle())
L = D.dwork_l_function()
print("Dwork polygon: ", certified_polygon(L.valuations(), 1))
print("oracle polygon:", np_oracle(f))
bad, unc = D.diff_violations()
print("F - F-dagger bound violations:", bad, "uncertified:", unc)
