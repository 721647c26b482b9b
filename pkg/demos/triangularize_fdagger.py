"""Semilinear triangularization of F-dagger over F_(13^2)."""
from expsum.charsum import MonicPoly
from expsum.dwork import FrobeniusData
from expsum.semilinear import triangularize, verify_np_theorem

f = MonicPoly(13, 2, ((0, 0), (1, 1), (2, 0)))
M = FrobeniusData(f).fdagger()
res = triangularize(M)
print("delta, eta (times p-1):", res.delta, res.eta)
print("sweeps:", res.iterations, "certified digits:", res.digits)
print("diagonal valuations of M':", [str(v) for v in res.diagonal_vals])
print("leading minor valuations:", [str(v) for v in res.minor_vals])
print("findings:", res.findings)
print(verify_np_theorem(M).to_json())
