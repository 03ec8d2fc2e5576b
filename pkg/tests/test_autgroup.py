import random

import pytest

from affaut.autgroup import (
    SubgroupSpec,
    TruncPoly,
    check_abelian_kernel,
    compose,
    composition_series,
    identity_map,
    iterate,
    lift_precision,
    member,
    nd_coordinates,
    nd_element,
    nd_sample,
    order,
    reduce_precision,
    sample_automorphism,
    sample_filtered,
)
from affaut.errors import NotAnAutomorphism, PreconditionFailed, ShapeMismatch
from affaut.rings import IntModRing, TruncSeriesRing


# --------------------------------------------------------------------------
# independent composition oracle: schoolbook expansion on plain int lists,
# sharing no code with the library paths


def _trim(c):
    while c and c[-1] == 0:
        c.pop()
    return c


def poly_mul_naive(a, b, m):
    if not a or not b:
        return []
    out = [0] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        for j, y in enumerate(b):
            out[i + j] = (out[i + j] + x * y) % m
    return _trim(out)


def compose_naive(f, g, m):
    res = []
    for a in reversed(f):
        res = poly_mul_naive(res, g, m)
        if res:
            res[0] = (res[0] + a) % m
        elif a % m:
            res = [a % m]
    return _trim(res)


def P(ring, coeffs):
    return TruncPoly(ring, coeffs)


# --------------------------------------------------------------------------
# composition


def test_compose_frozen_mod25():
    R = IntModRing(25, q=5)
    f = P(R, [1, 2, 5])
    g = P(R, [3, 1, 5])
    out = compose(f, g)
    assert [c.value for c in out.coeffs] == [2, 7, 15]
    assert compose_naive([1, 2, 5], [3, 1, 5], 25) == [2, 7, 15]


def test_compose_frozen_mod16():
    # the cross terms carry a factor 4*4 = 16 and die
    R = IntModRing(16, q=2)
    f = P(R, [0, 1, 0, 4])
    g = P(R, [0, 1, 4])
    out = compose(f, g)
    assert [c.value for c in out.coeffs] == [0, 1, 4, 4]
    assert compose_naive([0, 1, 0, 4], [0, 1, 4], 16) == [0, 1, 4, 4]


def test_compose_identity_both_sides():
    R = IntModRing(81, q=3)
    t = identity_map(R)
    f = P(R, [5, 7, 3, 9])
    assert compose(f, t) == f
    assert compose(t, f) == f


def test_compose_matches_naive_small_random():
    rng = random.Random(420)
    for m, q in ((64, 2), (81, 3), (125, 5), (12, None)):
        R = IntModRing(m, q=q)
        for _ in range(40):
            fc = [rng.randrange(m) for _ in range(rng.randrange(1, 7))]
            gc = [rng.randrange(m) for _ in range(rng.randrange(1, 7))]
            got = compose(P(R, fc), P(R, gc))
            assert [c.value for c in got.coeffs] == compose_naive(fc, gc, m)


def test_compose_matches_naive_taylor_path():
    """Degrees above the crossover with a unit-slope inner map exercise the
    expansion around the affine part; the schoolbook oracle keeps it
    honest."""
    rng = random.Random(421)
    for m, p in ((64, 2), (729, 3)):
        R = IntModRing(m, q=p)
        for _ in range(10):
            deg_f = rng.randrange(9, 14)
            deg_g = rng.randrange(11, 16)
            fc = [rng.randrange(m) for _ in range(deg_f + 1)]
            fc[-1] = fc[-1] or 1
            gc = [rng.randrange(m), rng.choice([1, 1 + p, m - 1])]
            gc += [p * rng.randrange(m // p) for _ in range(deg_g - 1)]
            gc[-1] = gc[-1] or p
            assert deg_f * deg_g > 96
            got = compose(P(R, fc), P(R, gc))
            assert [c.value for c in got.coeffs] == compose_naive(fc, gc, m)


def test_compose_matches_naive_nonunit_slope():
    # inner maps that are not automorphisms must fall back cleanly
    rng = random.Random(422)
    R = IntModRing(32, q=2)
    for _ in range(10):
        fc = [rng.randrange(32) for _ in range(12)]
        gc = [rng.randrange(32) for _ in range(12)]
        gc[1] = 2 * rng.randrange(16)
        got = compose(P(R, fc), P(R, gc))
        assert [c.value for c in got.coeffs] == compose_naive(fc, gc, 32)


def test_compose_affine_inner_long_outer():
    rng = random.Random(423)
    R = IntModRing(625, q=5)
    for _ in range(8):
        fc = [rng.randrange(625) for _ in range(40)]
        gc = [rng.randrange(625), rng.randrange(1, 625)]
        got = compose(P(R, fc), P(R, gc))
        assert [c.value for c in got.coeffs] == compose_naive(fc, gc, 625)


def test_compose_generic_ring_path():
    R = TruncSeriesRing("fp", 3, p=5)
    f = P(R, [(1, 0, 0), (0, 1, 0)])
    g = P(R, [(2, 1, 0), (1, 0, 0), (0, 0, 1)])
    out = compose(f, g)
    # f = 1 + t*T so f(g) = 1 + t*g
    want = P(R, [(1, 2, 1), (0, 1, 0), (0, 0, 0)])
    assert out == want


def test_compose_zero_and_constant():
    R = IntModRing(27, q=3)
    z = P(R, [])
    f = P(R, [4, 2, 9])
    assert compose(f, z).coeffs[0].value == 4
    assert compose(z, f).is_zero()
    c = P(R, [5])
    assert [x.value for x in compose(f, c).coeffs] == [(4 + 2 * 5 + 9 * 25) % 27]


def test_compose_degree_upper_bound():
    rng = random.Random(424)
    R = IntModRing(49, q=7)
    for _ in range(30):
        fc = [rng.randrange(49) for _ in range(rng.randrange(2, 6))]
        gc = [rng.randrange(49) for _ in range(rng.randrange(2, 6))]
        f, g = P(R, fc), P(R, gc)
        out = compose(f, g)
        if out.degree() is not None and f.degree() and g.degree():
            assert out.degree() <= f.degree() * g.degree()


def test_degree_law_mod_q2():
    """Automorphism pairs of distinct degree mod q^2 compose to the max of
    the two degrees: the nilpotent tails cannot interact below q^2."""
    rng = random.Random(425)
    for p in (2, 3, 5):
        R = IntModRing(p * p, q=p)
        hits = 0
        while hits < 60:
            f = sample_automorphism(R, rng.randrange(2, 7), rng)
            g = sample_automorphism(R, rng.randrange(2, 7), rng)
            if f.degree() == g.degree():
                continue
            hits += 1
            assert compose(f, g).degree() == max(f.degree(), g.degree())


# --------------------------------------------------------------------------
# automorphism recognition


def test_is_automorphism_basics():
    for p in (2, 3, 5):
        R = IntModRing(p ** 4, q=p)
        assert identity_map(R).is_automorphism()
        f = P(R, [1, 1, p, p * p, p ** 3])
        assert f.is_automorphism()
    R9 = IntModRing(9, q=3)
    assert not P(R9, [0, 1, 1]).is_automorphism()
    assert not P(R9, [3]).is_automorphism()
    assert not P(R9, []).is_automorphism()
    assert not P(R9, [1, 3]).is_automorphism()  # nilpotent slope


def test_is_automorphism_composite_modulus():
    R = IntModRing(12)
    assert P(R, [0, 1, 6]).is_automorphism()  # 6 is nilpotent mod 12
    assert not P(R, [0, 1, 4]).is_automorphism()  # 4 is not
    assert P(R, [3, 5, 0, 6]).is_automorphism()


def test_automorphisms_compose_and_sample():
    rng = random.Random(426)
    for m in (16, 27, 12):
        R = IntModRing(m)
        for _ in range(25):
            f = sample_automorphism(R, 4, rng)
            g = sample_automorphism(R, 4, rng)
            assert f.is_automorphism()
            assert compose(f, g).is_automorphism()


# --------------------------------------------------------------------------
# degree bookkeeping


def test_degree_mod_frozen():
    R8 = IntModRing(8, q=2)
    f = P(R8, [1, 1, 0, 2])
    assert f.degree_mod(1) == 1
    assert f.degree_mod(2) == 3
    R27 = IntModRing(27, q=3)
    g = P(R27, [0, 1, 0, 0, 0, 9])
    assert g.degree_mod(2) == 1
    assert g.degree_mod(3) == 5


def test_degree_mod_range_checked():
    R = IntModRing(8, q=2)
    f = P(R, [0, 1])
    with pytest.raises(PreconditionFailed):
        f.degree_mod(0)
    with pytest.raises(PreconditionFailed):
        f.degree_mod(4)


def test_degree_mod_zero_reduction():
    R = IntModRing(8, q=2)
    assert P(R, [4, 4]).degree_mod(1) is None
    assert P(R, []).degree_mod(2) is None


# --------------------------------------------------------------------------
# membership


def test_member_filtered_doubling_tower():
    for p in (2, 3):
        R = IntModRing(p ** 6, q=p)
        for d in (1, 2, 3):
            coeffs = [0] * (16 * d + 1)
            coeffs[1] = 1
            for k, e in ((d, 1), (2 * d, 2), (4 * d, 3), (8 * d, 4), (16 * d, 5)):
                coeffs[k] = (coeffs[k] + p ** e) % p ** 6
            psi = P(R, coeffs)
            assert member(psi, SubgroupSpec.parse(f"atilde:{d}"))


def test_member_identity_everything():
    R = IntModRing(16, q=2)
    t = identity_map(R)
    for s in ("full", "a:1", "a:3", "atilde:2", "n:4,2", "k:4,3"):
        assert member(t, SubgroupSpec.parse(s))


def test_member_filtered_degree_violation():
    for p, d in ((2, 2), (3, 1)):
        R = IntModRing(p * p, q=p)
        coeffs = [0, 1] + [0] * d
        coeffs.append(p)  # q * T^(d+1)
        f = P(R, coeffs)
        assert not member(f, SubgroupSpec(flavor="atilde", d=d))


def test_member_rejects_non_automorphism():
    R = IntModRing(9, q=3)
    with pytest.raises(NotAnAutomorphism):
        member(P(R, [0, 1, 1]), SubgroupSpec(flavor="atilde", d=2))


def test_member_shape_flavor():
    for p in (2, 3, 5):
        R = IntModRing(p ** 4, q=p)
        f = P(R, [1, 1, p, p * p, p ** 3])
        assert member(f, SubgroupSpec.parse("a:4"))
        assert not member(f, SubgroupSpec.parse("a:3"))
    R = IntModRing(8, q=2)
    g = P(R, [0, 1, 1])  # slope of T^2 coefficient not divisible by q
    with pytest.raises(NotAnAutomorphism):
        member(g, SubgroupSpec.parse("a:2"))
    h = P(R, [0, 1, 2])
    assert member(h, SubgroupSpec.parse("a:2"))


def test_member_kernel_flavors():
    R = IntModRing(8, q=2)
    f = P(R, [0, 1, 4])
    assert member(f, SubgroupSpec.parse("k:3,2"))
    assert not member(f, SubgroupSpec.parse("k:3,3"))
    g = P(R, [4, 5, 4, 4])
    assert member(g, SubgroupSpec.parse("n:3,2"))
    assert not member(g, SubgroupSpec.parse("n:3,3"))
    with pytest.raises(PreconditionFailed):
        member(f, SubgroupSpec.parse("k:4,2"))


def test_subgroup_spec_parse_roundtrip():
    for s in ("full", "a:2", "atilde:4", "n:4,2", "k:6,3"):
        assert SubgroupSpec.parse(s).show() == s
    with pytest.raises(PreconditionFailed):
        SubgroupSpec.parse("b:1")


def test_closure_in_filtered_subgroup():
    rng = random.Random(427)
    for p, n, d in ((2, 4, 2), (3, 3, 3), (5, 3, 1), (2, 6, 4)):
        R = IntModRing(p ** n, q=p)
        spec = SubgroupSpec(flavor="atilde", d=d)
        for _ in range(30):
            f = sample_filtered(R, d, rng)
            g = sample_filtered(R, d, rng)
            assert member(f, spec)
            assert member(g, spec)
            assert member(compose(f, g), spec)


def test_shape_subgroup_closed_at_matching_precision():
    rng = random.Random(428)
    for p, d in ((2, 3), (3, 4), (5, 2)):
        R = IntModRing(p ** d, q=p)
        spec = SubgroupSpec(flavor="a", d=d)
        for _ in range(30):
            coeffs = [R.rand(rng), R.rand_unit(rng)]
            coeffs += [p ** (i - 1) * rng.randrange(p ** (d - i + 1)) % p ** d
                       for i in range(2, d + 1)]
            f = P(R, coeffs)
            coeffs = [R.rand(rng), R.rand_unit(rng)]
            coeffs += [p ** (i - 1) * rng.randrange(p ** (d - i + 1)) % p ** d
                       for i in range(2, d + 1)]
            g = P(R, coeffs)
            assert member(f, spec) and member(g, spec)
            assert member(compose(f, g), spec)


# --------------------------------------------------------------------------
# the composition term bound, instrumented
#
# Write psi = a0 + a1*T + q*f_1 + ... + q^(n-1)*f_(n-1) with ord_T f_i >=
# i+1 (each coefficient of T^k, k >= 2, is pushed down to the smallest
# slice index its q-valuation allows).  Expanding psi(g) around the affine
# part of g makes every piece q^(i+j) * H_j(f_i)(g_aff) * A^j with
# A = (g - g_aff)/q, and each piece obeys a degree budget of
#   D(n-j-1) - j + j*D(n-i-j),   D(k) = d * 2^(k-1),
# which is what forces the doubling filtration to be closed.


def _slice_decomposition(f):
    ring = f.ring
    n = ring.truncation
    slices = {}
    cs = f.raw_coeffs()
    for k in range(2, len(cs)):
        if ring.is_zero(cs[k]):
            continue
        i = min(max(1, ring.q_val(cs[k])), k - 1, n - 1)
        slices.setdefault(i, {})[k] = ring.exact_div_q(cs[k], i)
    out = {}
    for i, entries in slices.items():
        coeffs = [ring.zero()] * (max(entries) + 1)
        for k, v in entries.items():
            coeffs[k] = v
        out[i] = TruncPoly(ring, coeffs)
    return out


def test_composition_term_degree_budget():
    rng = random.Random(429)
    for p, n, d in ((2, 4, 2), (3, 4, 3), (2, 6, 2), (5, 3, 2)):
        R = IntModRing(p ** n, q=p)

        def D(k):
            return d * 2 ** (k - 1)

        for _ in range(12):
            psi = sample_filtered(R, d, rng)
            phi = sample_filtered(R, d, rng)
            slices = _slice_decomposition(psi)
            aff = P(R, [phi.coeff(0), phi.coeff(1)])
            tail = phi - aff
            A = P(R, [R.exact_div_q(c, 1) for c in tail.raw_coeffs()])
            a_pow = P(R, [1])  # A^0
            for j in range(0, n - 1):
                if j > 0:
                    a_pow = a_pow * A
                for i, fi in slices.items():
                    if j > n - i - 1:
                        continue
                    term = fi.hasse_derivative(j).compose(aff) * a_pow
                    term = term.scale(R.q_power(i + j))
                    if term.is_zero():
                        continue
                    budget = D(n - j - 1) - j + j * D(n - i - j)
                    assert term.degree() <= budget
            total = compose(psi, phi)
            if total.degree() is not None:
                assert total.degree() <= d * 2 ** (n - 2)


# --------------------------------------------------------------------------
# iteration and order


def test_iterate_translation():
    R = IntModRing(27, q=3)
    f = P(R, [1, 1])
    for k in (0, 1, 5, 26, 27):
        assert iterate(f, k) == P(R, [k % 27, 1])


def test_iterate_zero_is_identity():
    R = IntModRing(16, q=2)
    f = P(R, [3, 5, 4])
    assert iterate(f, 0) == identity_map(R)


def test_iterate_matches_unrolled():
    rng = random.Random(430)
    R = IntModRing(81, q=3)
    for _ in range(10):
        f = sample_automorphism(R, 3, rng)
        g = identity_map(R)
        for k in range(8):
            assert iterate(f, k) == g
            g = compose(g, f)


def test_order_identity_and_translation():
    R = IntModRing(16, q=2)
    assert order(identity_map(R)) == 1
    assert order(P(R, [1, 1])) == 16
    R3 = IntModRing(9, q=3)
    assert order(P(R3, [1, 1])) == 9


def test_order_nontrivial_mod16():
    R = IntModRing(16, q=2)
    f = P(R, [1, 1, 2, 4, 8])
    k = order(f)
    assert k is not None
    assert iterate(f, k) == identity_map(R)
    # brute confirmation with the naive oracle
    cur = [0, 1]
    steps = 0
    fc = [1, 1, 2, 4, 8]
    while True:
        cur = compose_naive(fc, cur, 16)
        steps += 1
        if cur == [0, 1]:
            break
        assert steps <= k
    assert steps == k


def test_order_cap_returns_none():
    R = IntModRing(729, q=3)
    assert order(P(R, [1, 1]), cap=100) is None


def test_order_rejects_non_automorphism():
    R = IntModRing(9, q=3)
    with pytest.raises(NotAnAutomorphism):
        order(P(R, [0, 1, 1]))


def test_iterate_degree_stays_bounded():
    """Iterates never outgrow 2^(n-2) times the degree mod q^2 (sampling
    keeps the top coefficient visible mod q^2 so that the bound's premise
    holds)."""
    rng = random.Random(431)
    for p, n in ((2, 4), (3, 4), (2, 6), (5, 3)):
        R = IntModRing(p ** n, q=p)
        for _ in range(6):
            f = sample_automorphism(R, rng.randrange(2, 5), rng)
            cs = list(f.raw_coeffs())
            if len(cs) > 2 and R.q_val(cs[-1]) > 1:
                cs[-1] = p  # pin valuation 1 at the top
                f = P(R, cs)
            d2 = f.degree_mod(2)
            g = f
            for _ in range(20):
                g = compose(g, f)
                if g.degree() is not None:
                    assert g.degree() <= 2 ** (n - 2) * d2


# --------------------------------------------------------------------------
# the additive slab coordinates


def test_nd_composition_is_coordinatewise_addition():
    rng = random.Random(432)
    for p in (2, 3, 5):
        for d in (2, 3, 4):
            R = IntModRing(p ** d, q=p)
            for _ in range(25):
                u = [rng.randrange(p) for _ in range(d + 1)]
                v = [rng.randrange(p) for _ in range(d + 1)]
                fu, fv = nd_element(R, u), nd_element(R, v)
                s = nd_element(R, [(a + b) % p for a, b in zip(u, v)])
                assert compose(fu, fv) == s
                assert compose(fv, fu) == s


def test_nd_coordinate_count_is_d_plus_one():
    # the coordinate map genuinely has d+1 slots, one per power of T from
    # 0 through d
    rng = random.Random(433)
    for d in (2, 3, 4):
        R = IntModRing(3 ** d, q=3)
        f = nd_sample(R, rng)
        coords = nd_coordinates(f)
        assert len(coords) == d + 1
        assert nd_element(R, coords) == f


def test_nd_roundtrip_and_shape_errors():
    R = IntModRing(8, q=2)
    f = nd_element(R, [1, 0, 1, 1])
    assert [c for c in nd_coordinates(f)] == [1, 0, 1, 1]
    with pytest.raises(ShapeMismatch):
        nd_coordinates(P(R, [0, 1, 2]))  # congruence level 1 < d-1 = 2


# --------------------------------------------------------------------------
# precision transport


def test_lift_and_reduce_frozen():
    R5 = IntModRing(5, q=5)
    f = P(R5, [3, 2])
    lifted = lift_precision(f, 2)
    assert lifted.ring.m == 25
    assert [c.value for c in lifted.coeffs] == [3, 2]
    back = reduce_precision(lifted, 1)
    assert back == f


def test_reduce_then_lift_sections():
    rng = random.Random(434)
    R = IntModRing(3 ** 5, q=3)
    for _ in range(50):
        f = sample_automorphism(R, 4, rng)
        r = rng.randrange(1, 5)
        down = reduce_precision(f, r)
        assert reduce_precision(lift_precision(down, 5), r) == down


def test_reduce_upward_rejected():
    R = IntModRing(9, q=3)
    with pytest.raises(PreconditionFailed):
        reduce_precision(P(R, [0, 1]), 3)


def test_transport_series_ring():
    R = TruncSeriesRing("fp", 3, p=2)
    f = P(R, [(1, 1, 1), (1, 0, 0)])
    down = reduce_precision(f, 2)
    assert down.ring.e == 2
    up = lift_precision(down, 3)
    assert [c.value for c in up.coeffs] == [(1, 1, 0), (1, 0, 0)]


# --------------------------------------------------------------------------
# solvability chain


def test_series_prime_power_chain():
    rng = random.Random(435)
    steps = composition_series(IntModRing(16, q=2), rng=rng, samples=40)
    assert [(s.from_exponent, s.to_exponent) for s in steps] == [(4, 2), (2, 1)]
    assert all(s.kernel_abelian for s in steps)
    steps = composition_series(IntModRing(9, q=3), rng=rng, samples=40)
    assert [(s.from_exponent, s.to_exponent) for s in steps] == [(2, 1)]
    assert composition_series(IntModRing(5, q=5), rng=rng) == []


def test_series_composite_chain():
    rng = random.Random(436)
    steps = composition_series(IntModRing(72), rng=rng, samples=40)
    assert [(s.from_modulus, s.to_modulus) for s in steps] == [(72, 12), (12, 6)]
    assert all(s.kernel_abelian for s in steps)
    steps = composition_series(IntModRing(12), rng=rng, samples=40)
    assert [(s.from_modulus, s.to_modulus) for s in steps] == [(12, 6)]
    assert composition_series(IntModRing(30), rng=rng) == []


def test_abelian_kernel_guaranteed_regime():
    rng = random.Random(437)
    for p, n, r in ((2, 4, 2), (3, 3, 2), (5, 4, 3), (2, 6, 3)):
        R = IntModRing(p ** n, q=p)
        ok, checked, wit = check_abelian_kernel(R, r, samples=60, rng=rng)
        assert ok and wit is None and checked == 60


def test_abelian_kernel_exhaustive_small():
    R = IntModRing(4, q=2)
    ok, checked, wit = check_abelian_kernel(R, 1, mode="exhaustive", deg_cap=2)
    assert ok and wit is None
    assert checked == 8 * 7 // 2  # 2 choices per slot, 3 slots


def test_nonabelian_kernel_below_half():
    """r = 1 against precision 4 leaves room for interaction: a
    non-commuting pair exists and the sampler finds one."""
    rng = random.Random(438)
    R = IntModRing(16, q=2)
    ok, checked, wit = check_abelian_kernel(R, 1, samples=400, deg_cap=3, rng=rng)
    assert not ok
    f, g = wit
    assert compose(f, g) != compose(g, f)
    # a fixed witness pair, independent of the sampler
    f = P(R, [0, 1, 2])
    g = P(R, [0, 1, 0, 2])
    assert compose(f, g) != compose(g, f)


def test_filtration_step_json():
    rng = random.Random(439)
    steps = composition_series(IntModRing(16, q=2), rng=rng, samples=10)
    j = steps[0].to_json()
    assert j["from_modulus"] == "16" and j["to_modulus"] == "4"
    assert j["kernel_abelian"] is True and j["from_exponent"] == 4


# --------------------------------------------------------------------------
# serialization


def test_truncpoly_json_roundtrip():
    R = IntModRing(625, q=5)
    f = P(R, [7, 123, 0, 5])
    assert TruncPoly.from_json(R, f.to_json()) == f
    assert f.to_json() == {"coeffs": ["7", "123", "0", "5"]}


def test_truncpoly_repr_readable():
    R = IntModRing(25, q=5)
    assert repr(P(R, [2, 7, 15])) == "2 + 7*T + 15*T^2"
    assert repr(P(R, [])) == "0"
    assert repr(identity_map(R)) == "T"
