from fractions import Fraction as Fr

import pytest
from hypothesis import given, strategies as st

from expsum import linalg
from expsum.errors import PrecisionError
from expsum.padic import (
    AtLeast, PadicMatrix, _log_terms, artin_hasse_rationals, char_poly, dump_matrix,
    gamma_truncation, load_matrix, make_tower, series_mul, teichmuller, twisted_power,
)

TOWERS = [(5, 1, 6), (7, 2, 5), (3, 3, 6), (11, 1, 4)]


def tower(p, a, N):
    return make_tower(p, a, N)


def elem(T, data, allow_zero=True):
    # random element of O built from pi-coordinates over Z_q
    n = T.n
    coords = data.draw(st.lists(st.integers(0, T.mod - 1), min_size=n, max_size=n))
    shift = data.draw(st.integers(0, 2))
    x = T._make(list(coords), 0, T.cap)
    if shift:
        x = x * (T.pi() ** shift)
    if not allow_zero and x.val_units() is None:
        x = T.one()
    return x


def test_pi_is_eisenstein_root():
    T = tower(5, 1, 6)
    pi = T.pi()
    assert pi.valuation() == Fr(1, 4)
    zeta = pi + 1
    assert (zeta**5).agrees(T.one())
    assert not zeta.agrees(T.one())


def test_gamma_root_of_log_series():
    for p, a, N in TOWERS:
        T = tower(p, a, N)
        g = T.gamma
        assert g.valuation() == Fr(1, p - 1)
        terms = _log_terms(g, gamma_truncation(p, N))
        s = terms[0]
        for t in terms[1:]:
            s = s + t
        assert s.val_units() is None
        assert (g - T.pi()).vlb >= 2


def test_artin_hasse_of_gamma_is_zeta():
    p, N = 5, 5
    T = tower(p, 1, N)
    e = artin_hasse_rationals(p, N * (p - 1) + 4)
    acc, g = T.zero(), T.one()
    for c in e:
        acc = acc + g * c
        g = g * T.gamma
    assert acc.agrees(T.pi() + 1, T.cap - 1)


def test_artin_hasse_rationals_known_values():
    e = artin_hasse_rationals(3, 4)
    # exp(x + x^3/3) = 1 + x + x^2/2 + (1/6 + 1/3) x^3 + ...
    assert e[:4] == [1, 1, Fr(1, 2), Fr(1, 2)]


def test_teichmuller_is_fixed_by_q_power():
    T = tower(7, 2, 5)
    for code in range(1, 49, 5):
        r = T.residue_field.from_code(code)
        w = teichmuller(T, r)
        assert w.residue() == r
        assert (w ** T.q).agrees(w)
        assert (w.tau(1)).agrees(w ** 7)


def test_tau_fixes_pi_and_has_order_a():
    T = tower(3, 3, 6)
    y = T.y()
    assert T.pi().tau(1).agrees(T.pi())
    assert y.tau(3).agrees(y)
    assert not y.tau(1).agrees(y)
    assert y.tau(1).tau(-1).agrees(y)


def test_inverse_keeps_precision():
    T = tower(5, 1, 40)
    x = T.pi() ** 8 + T.pi() ** 9
    inv = x.inverse()
    assert inv.valuation() == -2
    assert (x * inv).agrees(T.one())
    assert inv.prec >= T.cap - 2 * 8 - 4 * 2 * 1


def test_uncertified_valuation_is_floor():
    T = tower(5, 1, 3)
    z = T.zero().with_prec(7)
    v = z.valuation()
    assert isinstance(v, AtLeast) and v.floor == Fr(7, 4)
    with pytest.raises(PrecisionError):
        (T.pi() ** 2).with_prec(0).residue()


@pytest.mark.parametrize("p,a,N", TOWERS)
@given(data=st.data())
def test_ring_laws(p, a, N, data):
    T = tower(p, a, N)
    x, y, z = elem(T, data), elem(T, data), elem(T, data)
    assert (x * (y + z)).agrees(x * y + x * z)
    assert ((x + y) - y).agrees(x)
    assert (x * y).tau(1).agrees(x.tau(1) * y.tau(1))
    vx, vy = x.val_units(), y.val_units()
    if vx is not None and vy is not None and vx + vy < T.cap - 2 * T.e:
        assert (x * y).val_units() == vx + vy


@pytest.mark.parametrize("p,a,N", TOWERS)
@given(data=st.data())
def test_inverse_property(p, a, N, data):
    T = tower(p, a, N)
    x = elem(T, data, allow_zero=False)
    inv = x.inverse()
    prod = x * inv
    assert prod.agrees(T.one())
    assert inv.val_units() == -x.val_units()


def test_series_mul_matches_schoolbook():
    T = tower(7, 2, 4)
    A = [T.from_zq([k, 2 * k + 1]) * T.pi() ** (k % 3) for k in range(6)]
    B = [T.from_zq([3 - k, k * k]) for k in range(5)]
    L = 7
    fast = series_mul(A, B, L)
    for k in range(L + 1):
        acc = T.zero()
        for i in range(len(A)):
            if 0 <= k - i < len(B):
                acc = acc + A[i] * B[k - i]
        assert fast[k].agrees(acc)


def test_char_poly_matches_determinant():
    T = tower(5, 2, 5)
    y = T.y()
    M = PadicMatrix(T, [[T.pi() * y, 1 + y, T.from_int(3)],
                        [y * y, T.pi() ** 2, y],
                        [T.from_int(2), T.pi(), 1 + T.pi()]])
    cp = char_poly(M)
    tr = M[0, 0] + M[1, 1] + M[2, 2]
    assert cp[0].agrees(T.one())
    assert cp[1].agrees(-tr)
    assert cp[3].agrees(-M.det())
    assert M.det().agrees(linalg.det_by_permutations(M.rows, T.one()))


def test_twisted_power_telescopes():
    T = tower(3, 3, 5)
    y = T.y()
    M = PadicMatrix(T, [[y, T.pi()], [T.from_int(1), y * y + 1]])
    assert twisted_power(M, 1).rows == M.rows
    M3 = twisted_power(M)
    direct = M @ M.tau(-1) @ M.tau(-2)
    assert all(M3[i, j].agrees(direct[i, j]) for i in range(2) for j in range(2))


def test_dump_round_trip():
    T = tower(7, 2, 5)
    y = T.y()
    M = PadicMatrix(T, [[y, T.pi() ** 3 * (y + 2)], [T.from_int(5), (y * 3).with_prec(20)]])
    back = load_matrix(dump_matrix(M))
    assert back.T.p == 7 and back.T.a == 2
    for i in range(2):
        for j in range(2):
            assert back[i, j].prec == M[i, j].prec
            assert back[i, j].valuation() == M[i, j].valuation()
            assert back[i, j].c == M[i, j].c


def test_load_rejects_malformed():
    with pytest.raises(ValueError):
        load_matrix({"p": 7, "a": 1, "N": 3, "rows": [[{"coords": [[1]], "shift": 0, "prec": "1/6"}]]})
    with pytest.raises(ValueError):
        load_matrix({"p": 7})


def test_tower_constants():
    T = make_tower(5, 1, 4)
    assert T.eisenstein_poly == (5, 10, 10, 5, 1)
    x = T.from_int(3) + T.pi() * 2
    assert x.tau(1).agrees(x) and x.tau(5).agrees(x)
    T2 = make_tower(5, 2, 4)
    assert T2.y().tau(2).agrees(T2.y())
    assert make_tower(7, 1, 3).gamma.valuation() == Fr(1, 6)
    T3 = make_tower(7, 2, 4)
    assert T3.gamma.tau(1).agrees(T3.gamma)


def test_teichmuller_examples():
    T = make_tower(5, 1, 3)
    assert teichmuller(T, 0).val_units() is None
    assert teichmuller(T, 1).agrees(T.one())
    t2 = teichmuller(T, 2)
    assert t2.agrees(T.from_int(57))
    assert (t2 * t2).agrees(T.from_int(-1))


@pytest.mark.parametrize("p,a", [(5, 2), (3, 3), (7, 2)])
def test_tau_of_teichmuller(p, a):
    T = make_tower(p, a, 4)
    F = T.residue_field
    for u in F.elements():
        assert teichmuller(T, u).tau(1).agrees(teichmuller(T, F.pow(u, p)))


def test_artin_hasse_root_of_unity():
    p, N = 5, 4
    T = make_tower(p, 1, N)
    e = artin_hasse_rationals(p, 60)
    z, g = T.zero(), T.one()
    for c in e:
        z = z + g * c
        g = g * T.gamma
    # Phi_5(z) = 1 + z + z^2 + z^3 + z^4
    phi = T.one() + z + z**2 + z**3 + z**4
    assert phi.val_units() is None or phi.val_units() >= T.cap


def test_gamma_related_valuations():
    for p in (5, 7, 11):
        T = make_tower(p, 1, p + 4)
        g = T.gamma
        gp = (g**p) * Fr(1, p)
        assert gp.valuation() == Fr(1, p - 1)
        g1 = g + gp
        assert g1.valuation() == Fr(p * p, p - 1) - 2


def test_basic_valuations():
    T = make_tower(7, 1, 5)
    assert T.from_int(7).valuation() == 1
    assert T.pi().valuation() == Fr(1, 6)
    v = T.zero().valuation()
    assert isinstance(v, AtLeast) and v.floor == 5


def test_char_poly_small_cases():
    T = make_tower(5, 1, 4)
    zero = PadicMatrix.zeros(T, 2)
    cp = char_poly(zero)
    assert cp[0].agrees(T.one()) and all(c.val_units() is None for c in cp.coeffs[1:])
    cp = char_poly(PadicMatrix.identity(T, 2))
    assert [c.agrees(T.from_int(k)) for c, k in zip(cp, (1, -2, 1))] == [True] * 3


def test_char_poly_integer_matrix_vs_permutation_expansion(rng):
    T = make_tower(7, 1, 6)
    for _ in range(5):
        A = [[rng.randrange(-20, 21) for _ in range(3)] for _ in range(3)]
        cp = char_poly(PadicMatrix(T, A))
        # det(I - tM) at t = 0..3, each by the permutation expansion
        for t in range(4):
            B = [[(1 if i == j else 0) - t * A[i][j] for j in range(3)] for i in range(3)]
            val = linalg.det_by_permutations(B)
            lhs = sum((cp[k] * t**k for k in range(1, 4)), cp[0])
            assert lhs.agrees(T.from_int(val))
