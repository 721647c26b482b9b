"""Oracle Newton polygons of random cubics against the Hodge polygon, prime by prime."""
import random

from expsum.charsum import MonicPoly, np_oracle
from expsum.polygon import hodge_polygon

rng = random.Random(7)
hp = hodge_polygon(3)
print("HP(3):", hp)
for p in (5, 7, 11, 13, 17, 19):
    polys = [np_oracle(MonicPoly.from_ints(p, 1, [0, rng.randrange(p), rng.randrange(p)])) for _ in range(10)]
    on_hp = sum(P == hp for P in polys)
    print(f"p={p:2d}  p mod 3 = {p % 3}  {on_hp}/10 equal HP  e.g. {polys[0]}")

# the pure power at p = -1 mod d is supersingular
print("x^3 at p=5:", np_oracle(MonicPoly.from_ints(5, 1, [0, 0, 0])))
