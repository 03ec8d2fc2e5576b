"""Polynomial maps of the affine line over a truncated ring, under
composition.

A :class:`TruncPoly` is a univariate polynomial f(T) over one of the
coefficient rings from :mod:`affaut.rings`; it represents the substitution
map T -> f(T).  Composition is the group operation; f is invertible
exactly when its linear coefficient is a unit and all higher ones are
nilpotent.

Composition has two specialized code paths for integers mod m (a direct
Horner loop with Kronecker-packed multiplication for small problems, and
an expansion around the affine part of the inner map for large ones) plus
a generic Horner fallback that works over every ring.  All paths are
checked against each other in the test suite.
"""

from __future__ import annotations

import itertools
from array import array
from dataclasses import dataclass
from typing import Iterator, Optional, Sequence, Union

from .errors import (
    InfiniteCoefficientRing,
    NotAnAutomorphism,
    PreconditionFailed,
    RingMismatch,
    ShapeMismatch,
)
from .rings import IntModRing, Ring, RingElem, SymbolicRing, TruncSeriesRing

# ---------------------------------------------------------------------------
# integer coefficient-list helpers (hot path: plain ints, no wrappers)


def _int_trim(c: list) -> list:
    while c and not c[-1]:
        c.pop()
    return c


def _kron_mul(a: Sequence[int], b: Sequence[int], m: int) -> list:
    """Multiply two canonical coefficient lists mod m by packing them into
    big integers (Kronecker substitution); one CPython bigint multiply does
    the convolution."""
    if not a or not b:
        return []
    bits = 2 * (m - 1).bit_length() + min(len(a), len(b)).bit_length()
    n_out = len(a) + len(b) - 1
    if bits <= 63:
        pa = int.from_bytes(array("Q", a).tobytes(), "little")
        pb = int.from_bytes(array("Q", b).tobytes(), "little")
        buf = (pa * pb).to_bytes(8 * (n_out + 1), "little")
        mv = memoryview(buf).cast("Q")
        return _int_trim([x % m for x in mv[:n_out]])
    w = (bits + 63) // 64 * 8
    pa = int.from_bytes(b"".join(x.to_bytes(w, "little") for x in a), "little")
    pb = int.from_bytes(b"".join(x.to_bytes(w, "little") for x in b), "little")
    buf = (pa * pb).to_bytes(w * (n_out + 1), "little")
    return _int_trim(
        [int.from_bytes(buf[i * w:(i + 1) * w], "little") % m for i in range(n_out)]
    )


def _int_add(a: Sequence[int], b: Sequence[int], m: int) -> list:
    if len(a) < len(b):
        a, b = b, a
    out = list(a)
    for i, y in enumerate(b):
        out[i] = (out[i] + y) % m
    return _int_trim(out)


def _affine_power_row(c: int, u: int, h: int, m: int) -> list:
    """(c + u*T)^h mod m via the binomial row; the binomial is kept as an
    exact integer for its recurrence and reduced on use."""
    cp = [1]
    up = [1]
    for _ in range(h):
        cp.append(cp[-1] * c % m)
        up.append(up[-1] * u % m)
    row = []
    comb = 1
    for k in range(h + 1):
        row.append(comb % m * cp[h - k] % m * up[k] % m)
        comb = comb * (h - k) // (k + 1)
    return _int_trim(row)


def _affine_compose_int(f: Sequence[int], c: int, u: int, m: int) -> list:
    """f(c + u*T) mod m; quadratic Horner for short f, otherwise split f in
    half and recombine with one Kronecker multiply per level."""
    if not f:
        return []
    if len(f) <= 24:
        res = [f[-1] % m]
        for a in reversed(f[:-1]):
            new = [(c * res[0] + a) % m]
            new.extend((c * hi + u * lo) % m for hi, lo in zip(res[1:], res))
            new.append(u * res[-1] % m)
            res = new
        return _int_trim(res)
    half = len(f) >> 1
    lo = _affine_compose_int(f[:half], c, u, m)
    hi = _affine_compose_int(f[half:], c, u, m)
    if not hi:
        return _int_trim(lo)
    shifted = _kron_mul(hi, _affine_power_row(c, u, half, m), m)
    return _int_add(lo, shifted, m)


def _compose_int_horner(f: Sequence[int], g: Sequence[int], m: int) -> list:
    if not f:
        return []
    res = [f[-1] % m]
    for a in reversed(f[:-1]):
        res = _kron_mul(res, g, m)
        if res:
            res[0] = (res[0] + a) % m
        elif a % m:
            res = [a % m]
    return _int_trim(res)


def _compose_int_taylor(f: Sequence[int], g: Sequence[int], ring: IntModRing) -> list:
    """f(g) mod m via the expansion around the affine part of g:

        f(b0 + rest) = sum_j (H_j f)(b0) * rest^j

    with H_j the j-th Hasse derivative and b0 = g_0 + g_1*T.  Because
    (H_j f)(b0) = u^-j * H_j(f o b0) when b0 is affine with unit slope u,
    one affine composition plus cheap binomial scalings covers every j.
    The sum is finite since rest has nilpotent coefficients."""
    m = ring.m
    if not f:
        return []
    c = g[0] if g else 0
    u = g[1] if len(g) > 1 else 0
    base = _affine_compose_int(f, c, u, m)
    rest = _int_trim([0, 0] + list(g[2:]))
    if not rest or len(f) == 1:
        return base
    uinv = ring.inv(u)
    result = list(base)
    power: list = [1]
    uij = 1
    nu = ring.nilpotency_index
    for j in range(1, len(f)):
        power = _kron_mul(power, rest, m)
        if not power:
            break
        if j >= nu:
            # rest^nu is identically zero; only canonical-form slack could
            # get us here
            break
        uij = uij * uinv % m
        # H_j(base) scaled by uinv^j, coefficient C(i, j) kept exact for the
        # integer recurrence and reduced only when used
        comb = 1
        hj = []
        for i in range(j, len(base)):
            hj.append(comb % m * base[i] % m * uij % m)
            comb = comb * (i + 1) // (i + 1 - j)
        hj = _int_trim(hj)
        if hj:
            result = _int_add(result, _kron_mul(hj, power, m), m)
    return _int_trim(result)


# ---------------------------------------------------------------------------
# generic payload helpers


def _poly_mul_generic(a, b, ring: Ring) -> list:
    if not a or not b:
        return []
    out = [ring.zero()] * (len(a) + len(b) - 1)
    for i, x in enumerate(a):
        if ring.is_zero(x):
            continue
        for j, y in enumerate(b):
            out[i + j] = ring.add(out[i + j], ring.mul(x, y))
    while out and ring.is_zero(out[-1]):
        out.pop()
    return out


def _compose_generic(f, g, ring: Ring) -> list:
    if not f:
        return []
    res = [f[-1]]
    for a in reversed(f[:-1]):
        res = _poly_mul_generic(res, g, ring)
        if res:
            res[0] = ring.add(res[0], a)
        elif not ring.is_zero(a):
            res = [a]
    while res and ring.is_zero(res[-1]):
        res.pop()
    return res


# ---------------------------------------------------------------------------


class TruncPoly:
    """Immutable univariate polynomial over a coefficient ring, acting on
    the line by substitution.  Coefficients are stored low degree first
    with trailing zeros trimmed, so equality is canonical."""

    __slots__ = ("ring", "_c")

    def __init__(self, ring: Ring, coeffs: Sequence):
        pays = [ring.pay(c) for c in coeffs]
        while pays and ring.is_zero(pays[-1]):
            pays.pop()
        self.ring = ring
        self._c = tuple(pays)

    @classmethod
    def _raw(cls, ring: Ring, payloads: Sequence) -> "TruncPoly":
        obj = object.__new__(cls)
        object.__setattr__(obj, "ring", ring)
        pl = list(payloads)
        while pl and ring.is_zero(pl[-1]):
            pl.pop()
        object.__setattr__(obj, "_c", tuple(pl))
        return obj

    def __setattr__(self, k, v):
        if k in ("ring", "_c") and not hasattr(self, "_c"):
            object.__setattr__(self, k, v)
        else:
            raise AttributeError("TruncPoly is immutable")

    # -- basic views ------------------------------------------------------

    @property
    def coeffs(self) -> tuple:
        return tuple(RingElem(self.ring, c) for c in self._c)

    def coeff(self, i: int) -> RingElem:
        c = self._c[i] if 0 <= i < len(self._c) else self.ring.zero()
        return RingElem(self.ring, c)

    def raw_coeffs(self) -> tuple:
        return self._c

    def degree(self) -> Optional[int]:
        """Degree, or None for the zero polynomial."""
        return len(self._c) - 1 if self._c else None

    def degree_mod(self, m: int) -> Optional[int]:
        """Degree of the reduction mod q^m (None when that reduction is
        zero)."""
        ring = self.ring
        if not ring.has_q():
            raise PreconditionFailed(f"{ring} has no q-adic structure")
        if m < 1 or (ring.truncation is not None and m > ring.truncation):
            raise PreconditionFailed(f"exponent {m} out of range")
        for i in range(len(self._c) - 1, -1, -1):
            if ring.q_val(self._c[i]) < m:
                return i
        return None

    def is_zero(self) -> bool:
        return not self._c

    def __eq__(self, other):
        if not isinstance(other, TruncPoly):
            return NotImplemented
        return self.ring == other.ring and self._c == other._c

    def __hash__(self):
        return hash((self.ring.describe(), self._c))

    def __repr__(self):
        if not self._c:
            return "0"
        parts = []
        for i, c in enumerate(self._c):
            if self.ring.is_zero(c):
                continue
            s = self.ring.show(c)
            if i > 0 and (" " in s or "+" in s or "-" in s[1:]):
                s = f"({s})"
            if i == 0:
                parts.append(s)
            elif i == 1:
                parts.append(f"{s}*T" if s != "1" else "T")
            else:
                parts.append(f"{s}*T^{i}" if s != "1" else f"T^{i}")
        return " + ".join(parts) if parts else "0"

    # -- arithmetic on coefficients ----------------------------------------

    def __add__(self, other: "TruncPoly") -> "TruncPoly":
        self._check(other)
        ring = self.ring
        a, b = self._c, other._c
        if len(a) < len(b):
            a, b = b, a
        out = list(a)
        for i, y in enumerate(b):
            out[i] = ring.add(out[i], y)
        return TruncPoly._raw(ring, out)

    def __sub__(self, other: "TruncPoly") -> "TruncPoly":
        self._check(other)
        ring = self.ring
        out = list(self._c)
        out += [ring.zero()] * (len(other._c) - len(out))
        for i, y in enumerate(other._c):
            out[i] = ring.sub(out[i], y)
        return TruncPoly._raw(ring, out)

    def scale(self, c) -> "TruncPoly":
        ring = self.ring
        cp = ring.pay(c)
        return TruncPoly._raw(ring, [ring.mul(cp, x) for x in self._c])

    def __mul__(self, other: "TruncPoly") -> "TruncPoly":
        self._check(other)
        ring = self.ring
        if isinstance(ring, IntModRing):
            return TruncPoly._raw(ring, _kron_mul(self._c, other._c, ring.m))
        return TruncPoly._raw(ring, _poly_mul_generic(self._c, other._c, ring))

    def derivative(self) -> "TruncPoly":
        ring = self.ring
        out = [
            ring.mul(ring.from_int(i), self._c[i]) for i in range(1, len(self._c))
        ]
        return TruncPoly._raw(ring, out)

    def hasse_derivative(self, j: int) -> "TruncPoly":
        """The divided j-th derivative: coefficient of T^k maps to
        C(k, j) * c_k at T^(k-j).  Integral in every characteristic."""
        if j < 0:
            raise PreconditionFailed("negative derivative index")
        ring = self.ring
        out = []
        comb = 1
        for k in range(j, len(self._c)):
            out.append(ring.mul(ring.from_int(comb), self._c[k]))
            comb = comb * (k + 1) // (k + 1 - j)
        return TruncPoly._raw(ring, out)

    def evaluate(self, x) -> RingElem:
        ring = self.ring
        xp = ring.pay(x)
        acc = ring.zero()
        for c in reversed(self._c):
            acc = ring.add(ring.mul(acc, xp), c)
        return RingElem(ring, acc)

    def _check(self, other: "TruncPoly"):
        if self.ring != other.ring:
            raise RingMismatch(f"{self.ring} vs {other.ring}")

    # -- the group structure ----------------------------------------------

    def compose(self, g: "TruncPoly") -> "TruncPoly":
        """self(g(T)) -- apply g first, then self."""
        self._check(g)
        ring = self.ring
        f_c, g_c = self._c, g._c
        if isinstance(ring, IntModRing):
            df = len(f_c) - 1
            dg = len(g_c) - 1
            if df <= 0 or dg <= 0:
                out = _compose_int_horner(f_c, g_c, ring.m)
            elif dg == 1 and df > 24:
                out = _affine_compose_int(f_c, g_c[0], g_c[1], ring.m)
            elif df * dg <= 96 or len(g_c) < 3:
                out = _compose_int_horner(f_c, g_c, ring.m)
            else:
                rest_ok = all(ring.is_nilpotent(c) for c in g_c[2:])
                u_ok = len(g_c) > 1 and ring.is_unit(g_c[1])
                if rest_ok and u_ok:
                    out = _compose_int_taylor(f_c, g_c, ring)
                else:
                    out = _compose_int_horner(f_c, g_c, ring.m)
            return TruncPoly._raw(ring, out)
        return TruncPoly._raw(ring, _compose_generic(f_c, g_c, ring))

    def is_automorphism(self) -> bool:
        """Unit linear coefficient and nilpotent higher coefficients; this
        is exactly invertibility under composition over these rings."""
        ring = self.ring
        if len(self._c) < 2:
            return False
        if not ring.is_unit(self._c[1]):
            return False
        return all(ring.is_nilpotent(c) for c in self._c[2:])

    def identity_congruence(self) -> int:
        """Largest r (capped at the truncation exponent) with
        self = T mod q^r."""
        ring = self.ring
        if not ring.has_q() or ring.truncation is None:
            raise PreconditionFailed("needs a truncated q-adic ring")
        n = ring.truncation
        best = n
        one = ring.one()
        for i, c in enumerate(self._c):
            v = ring.q_val(ring.sub(c, one) if i == 1 else c)
            if v < best:
                best = v
        if len(self._c) < 2:
            best = min(best, ring.q_val(ring.neg(one)))
        return best

    def to_json(self) -> dict:
        return {"coeffs": [self.ring.payload_to_json(c) for c in self._c]}

    @classmethod
    def from_json(cls, ring: Ring, j: dict) -> "TruncPoly":
        return cls(ring, [ring.payload_from_json(c) for c in j["coeffs"]])


def identity_map(ring: Ring) -> TruncPoly:
    return TruncPoly(ring, [ring.zero(), ring.one()])


def compose(f: TruncPoly, g: TruncPoly) -> TruncPoly:
    return f.compose(g)


# ---------------------------------------------------------------------------
# precision transport


def _transport_payload(a, src: Ring, dst: Ring):
    if isinstance(src, IntModRing) and isinstance(dst, IntModRing):
        return a % dst.m
    if isinstance(src, TruncSeriesRing) and isinstance(dst, TruncSeriesRing):
        z = dst._szero()
        cut = list(a[: dst.e])
        return tuple(cut) + (z,) * (dst.e - len(cut))
    if isinstance(src, SymbolicRing) and isinstance(dst, SymbolicRing):
        return dst._norm(dict(a.terms), a.bk)
    raise RingMismatch(f"cannot transport between {src} and {dst}")


def reduce_precision(f: TruncPoly, m: int) -> TruncPoly:
    """Push f along R/q^n -> R/q^m (m <= n)."""
    src = f.ring
    if src.truncation is None:
        raise PreconditionFailed("source ring is not truncated")
    if m > src.truncation:
        raise PreconditionFailed("cannot reduce upward")
    dst = src.at_precision(m)
    return TruncPoly._raw(dst, [_transport_payload(c, src, dst) for c in f._c])


def lift_precision(f: TruncPoly, n: int) -> TruncPoly:
    """Lift f along canonical representatives to precision n >= current."""
    src = f.ring
    if src.truncation is None:
        raise PreconditionFailed("source ring is not truncated")
    if n < src.truncation:
        raise PreconditionFailed("cannot lift downward")
    dst = src.at_precision(n)
    return TruncPoly._raw(dst, [_transport_payload(c, src, dst) for c in f._c])


def reduce_modulus(f: TruncPoly, m2: int) -> TruncPoly:
    """Z/m -> Z/m2 reduction for composite moduli chains (m2 | m)."""
    src = f.ring
    if not isinstance(src, IntModRing) or src.m % m2:
        raise PreconditionFailed("target modulus must divide the source")
    dst = IntModRing(m2)
    return TruncPoly._raw(dst, [c % m2 for c in f._c])


# ---------------------------------------------------------------------------
# iteration and order


def iterate(f: TruncPoly, r: int) -> TruncPoly:
    """r-fold composition of f with itself (r >= 0) by repeated squaring;
    iterates of automorphisms keep the degree bounds of their filtered
    subgroup, so sizes stay tame."""
    if r < 0:
        raise PreconditionFailed("negative iteration count")
    acc = identity_map(f.ring)
    base = f
    while r:
        if r & 1:
            acc = acc.compose(base)
        r >>= 1
        if r:
            base = base.compose(base)
    return acc


def order(f: TruncPoly, cap: int = 10 ** 6) -> Optional[int]:
    """Least k >= 1 with f^(k) = T, or None when no order is found within
    cap compositions."""
    if not f.is_automorphism():
        raise NotAnAutomorphism(repr(f))
    ident = identity_map(f.ring)
    g = f
    k = 1
    while g != ident:
        if k >= cap:
            return None
        g = g.compose(f)
        k += 1
    return k


# ---------------------------------------------------------------------------
# subgroup specifications and membership


@dataclass(frozen=True)
class SubgroupSpec:
    """Which subgroup a membership question refers to.

    flavor "full"   -- every automorphism;
    flavor "a"      -- degree <= d with coefficient of T^i divisible by
                       q^(i-1) for i >= 2;
    flavor "atilde" -- deg(f mod q^m) <= d*2^(m-2) for every 2 <= m <= n;
    flavor "n"      -- the "a"-shape at precision n, congruent to T mod q^r;
    flavor "k"      -- any automorphism congruent to T mod q^r.
    """

    flavor: str
    d: Optional[int] = None
    n: Optional[int] = None
    r: Optional[int] = None

    @classmethod
    def parse(cls, s: str) -> "SubgroupSpec":
        s = s.strip().lower()
        if s == "full":
            return cls("full")
        head, _, tail = s.partition(":")
        if head in ("a", "atilde"):
            return cls(head, d=int(tail))
        if head in ("n", "k"):
            n_s, _, r_s = tail.partition(",")
            return cls(head, n=int(n_s), r=int(r_s))
        raise PreconditionFailed(f"unknown subgroup spec {s!r}")

    def show(self) -> str:
        if self.flavor == "full":
            return "full"
        if self.flavor in ("a", "atilde"):
            return f"{self.flavor}:{self.d}"
        return f"{self.flavor}:{self.n},{self.r}"


def atilde_coefficient_valuation(d: int, j: int, n: int) -> int:
    """Minimum q-valuation forced on the coefficient of T^j by the degree
    bounds deg(f mod q^m) <= d*2^(m-2), together with affineness mod q."""
    if j <= 1:
        return 0
    v = 1
    for m in range(2, n + 1):
        if d * (1 << (m - 2)) < j:
            v = max(v, m)
    return min(v, n)


def member(f: TruncPoly, spec: SubgroupSpec) -> bool:
    ring = f.ring
    if spec.flavor == "full":
        return f.is_automorphism()
    if not f.is_automorphism():
        raise NotAnAutomorphism(repr(f))
    if spec.flavor == "a":
        d = spec.d
        if f.degree() is not None and f.degree() > d:
            return False
        for i in range(2, len(f._c)):
            if ring.q_val(f._c[i]) < i - 1:
                return False
        return True
    if spec.flavor == "atilde":
        n = ring.truncation
        if n is None:
            raise PreconditionFailed("atilde needs a truncated ring")
        d = spec.d
        for m in range(2, n + 1):
            dm = f.degree_mod(m)
            if dm is not None and dm > d * (1 << (m - 2)):
                return False
        return True
    if spec.flavor == "n":
        if ring.truncation != spec.n:
            raise PreconditionFailed(
                f"ring precision {ring.truncation} != subgroup precision {spec.n}"
            )
        if f.degree() is not None and f.degree() > spec.n:
            return False
        for i in range(2, len(f._c)):
            if ring.q_val(f._c[i]) < i - 1:
                return False
        return f.identity_congruence() >= spec.r
    if spec.flavor == "k":
        if ring.truncation != spec.n:
            raise PreconditionFailed(
                f"ring precision {ring.truncation} != subgroup precision {spec.n}"
            )
        return f.identity_congruence() >= spec.r
    raise PreconditionFailed(f"unknown flavor {spec.flavor!r}")


# ---------------------------------------------------------------------------
# sampling


def _rand_nilpotent(ring: Ring, rng):
    if isinstance(ring, IntModRing):
        return ring.radical * rng.randrange(ring.m // ring.radical) % ring.m
    if isinstance(ring, TruncSeriesRing):
        return ring.mul(ring.q_power(1), ring.rand(rng))
    raise InfiniteCoefficientRing(f"cannot sample nilpotents of {ring}")


def sample_automorphism(ring: Ring, max_deg: int, rng) -> TruncPoly:
    """Uniform over automorphisms of degree <= max_deg (constant term free,
    unit linear term, nilpotent higher terms)."""
    coeffs = [ring.rand(rng), ring.rand_unit(rng)]
    coeffs += [_rand_nilpotent(ring, rng) for _ in range(max_deg - 1)]
    return TruncPoly._raw(ring, coeffs)


def sample_filtered(ring: Ring, d: int, rng) -> TruncPoly:
    """Uniform over the degree-filtered subgroup of parameter d (flavor
    "atilde"): the coefficient of T^j carries at least the valuation the
    degree bounds force on it."""
    n = ring.truncation
    if n is None or not ring.has_q():
        raise PreconditionFailed("needs a truncated q-adic ring")
    top = d * (1 << (n - 2)) if n >= 2 else d
    coeffs = [ring.rand(rng), ring.rand_unit(rng)]
    for j in range(2, top + 1):
        v = atilde_coefficient_valuation(d, j, n)
        coeffs.append(ring.mul(ring.q_power(v), ring.rand(rng)))
    return TruncPoly._raw(ring, coeffs)


def sample_kernel_element(ring: Ring, r: int, deg_cap: int, rng) -> TruncPoly:
    """Uniform over automorphisms congruent to T mod q^r with degree <=
    deg_cap."""
    qr = ring.q_power(r)
    coeffs = [ring.mul(qr, ring.rand(rng)) for _ in range(deg_cap + 1)]
    if len(coeffs) > 1:
        coeffs[1] = ring.add(ring.one(), coeffs[1])
    return TruncPoly._raw(ring, coeffs)


# ---------------------------------------------------------------------------
# the last filtration slab of the degree-d shape group
#
# Inside the group of shape-d automorphisms at precision d, the elements
# reducing to T at precision d-1 form T + q^(d-1)*h with deg h <= d; the
# d+1 coefficients of h mod q are honest coordinates and composition is
# coordinatewise addition (valid for d >= 2, where q^(2(d-1)) = 0).


def nd_element(ring: Ring, coords: Sequence) -> TruncPoly:
    """Build T + q^(d-1) * sum(coords[j] * T^j) over a ring truncated at
    q^d; coords has d+1 entries read mod q."""
    d = ring.truncation
    if d is None or len(coords) != d + 1:
        raise PreconditionFailed("need d+1 coordinates over a q^d-truncated ring")
    qd = ring.q_power(d - 1)
    cs = [ring.mul(qd, ring.pay(c)) for c in coords]
    if len(cs) > 1:
        cs[1] = ring.add(ring.one(), cs[1])
    return TruncPoly._raw(ring, cs)


def nd_coordinates(f: TruncPoly) -> list:
    """Recover the d+1 coordinates of a slab element; inverse of
    nd_element up to reduction of each coordinate mod q."""
    ring = f.ring
    d = ring.truncation
    if d is None:
        raise PreconditionFailed("needs a q^d-truncated ring")
    if f.degree() is not None and f.degree() > d:
        raise ShapeMismatch(f"degree {f.degree()} exceeds {d}")
    if f.identity_congruence() < d - 1:
        raise ShapeMismatch("element does not reduce to T one level down")
    r0 = ring.at_precision(1)
    out = []
    for j in range(d + 1):
        c = f._c[j] if j < len(f._c) else ring.zero()
        if j == 1:
            c = ring.sub(c, ring.one())
        out.append(_transport_payload(ring.exact_div_q(c, d - 1), ring, r0))
    return out


def nd_sample(ring: Ring, rng) -> TruncPoly:
    d = ring.truncation
    r0 = ring.at_precision(1)
    return nd_element(ring, [r0.rand(rng) for _ in range(d + 1)])


# ---------------------------------------------------------------------------
# solvable filtration


@dataclass(frozen=True)
class FiltrationStep:
    """One precision-halving step of the filtration; levels are precision
    exponents for prime powers and plain moduli for composite m."""

    from_modulus: int
    to_modulus: int
    from_exponent: Optional[int]
    to_exponent: Optional[int]
    kernel_abelian: bool
    pairs_checked: int
    witness: Optional[tuple] = None

    def to_json(self) -> dict:
        out = {
            "from_modulus": str(self.from_modulus),
            "to_modulus": str(self.to_modulus),
            "kernel_abelian": self.kernel_abelian,
            "pairs_checked": self.pairs_checked,
        }
        if self.from_exponent is not None:
            out["from_exponent"] = self.from_exponent
            out["to_exponent"] = self.to_exponent
        if self.witness is not None:
            out["witness"] = [w.to_json() for w in self.witness]
        return out


def _kernel_elements_exhaustive(ring: Ring, r: int, deg_cap: int) -> Iterator[TruncPoly]:
    """All automorphisms = T mod q^r with degree <= deg_cap, for a finite
    truncated ring (prime-power or series)."""
    n = ring.truncation
    if isinstance(ring, IntModRing):
        ring._need_q()
        per_slot = ring.p ** (n - r)
        qr = ring.p ** r
        slot_values = [k * qr % ring.m for k in range(per_slot)]
    elif isinstance(ring, TruncSeriesRing):
        per = ring.p ** (n - r)
        slot_values = []
        for digits in itertools.product(range(ring.p), repeat=n - r):
            z = (0,) * r + digits
            slot_values.append(ring.coerce_payload(z))
        per_slot = per
    else:
        raise InfiniteCoefficientRing(f"cannot enumerate kernels of {ring}")
    one = ring.one()
    for combo in itertools.product(range(per_slot), repeat=deg_cap + 1):
        coeffs = [slot_values[k] for k in combo]
        coeffs[1] = ring.add(one, coeffs[1])
        yield TruncPoly._raw(ring, coeffs)


def check_abelian_kernel(
    ring: Ring,
    r: int,
    mode: str = "sampled",
    samples: int = 200,
    deg_cap: int = 4,
    rng=None,
) -> tuple[bool, int, Optional[tuple]]:
    """Probe whether the congruence kernel at level r is abelian, by
    composing pairs both ways.  Returns (verdict, pairs checked, witness),
    the witness being a non-commuting pair when one is found."""
    if mode == "exhaustive":
        elems = list(_kernel_elements_exhaustive(ring, r, deg_cap))
        checked = 0
        for i in range(len(elems)):
            fi = elems[i]
            for j in range(i + 1, len(elems)):
                gj = elems[j]
                checked += 1
                if fi.compose(gj) != gj.compose(fi):
                    return False, checked, (fi, gj)
        return True, checked, None
    if rng is None:
        raise PreconditionFailed("sampled mode needs an rng")
    checked = 0
    for _ in range(samples):
        f = sample_kernel_element(ring, r, deg_cap, rng)
        g = sample_kernel_element(ring, r, deg_cap, rng)
        checked += 1
        if f.compose(g) != g.compose(f):
            return False, checked, (f, g)
    return True, checked, None


def _check_abelian_kernel_mod(
    ring: IntModRing, m2: int, samples: int, deg_cap: int, rng
) -> tuple[bool, int, Optional[tuple]]:
    """Same probe for the kernel of reducing Z/m -> Z/m2 (composite m).
    Kernel elements are T + (m2 * anything)."""
    step = m2
    span = ring.m // m2
    checked = 0
    for _ in range(samples):
        polys = []
        for _ in range(2):
            coeffs = [step * rng.randrange(span) % ring.m for _ in range(deg_cap + 1)]
            coeffs[1] = (1 + coeffs[1]) % ring.m
            polys.append(TruncPoly._raw(ring, coeffs))
        f, g = polys
        checked += 1
        if f.compose(g) != g.compose(f):
            return False, checked, (f, g)
    return True, checked, None


def composition_series(
    ring: IntModRing,
    rng=None,
    samples: int = 100,
    deg_cap: int = 4,
) -> list[FiltrationStep]:
    """The precision-halving filtration n -> ceil(n/2) -> ... -> 1 whose
    kernels are abelian, witnessing solvability down to the affine group.

    For composite m each step divides every prime exponent in half (rounded
    up); the kernel ideal I then always satisfies I^2 = 0, so the same
    argument applies.  The returned steps carry sampled commutation
    evidence (deterministic given rng)."""
    if not isinstance(ring, IntModRing):
        raise PreconditionFailed("composition series works over Z/m")
    steps: list[FiltrationStep] = []
    if ring.p is not None:
        n = ring.n
        cur = n
        while cur > 1:
            nxt = (cur + 1) // 2
            cur_ring = ring.at_precision(cur)
            ok, checked, wit = check_abelian_kernel(
                cur_ring, nxt, mode="sampled", samples=samples, deg_cap=deg_cap,
                rng=rng,
            ) if rng is not None else (True, 0, None)
            steps.append(
                FiltrationStep(
                    from_modulus=ring.p ** cur,
                    to_modulus=ring.p ** nxt,
                    from_exponent=cur,
                    to_exponent=nxt,
                    kernel_abelian=ok,
                    pairs_checked=checked,
                    witness=wit,
                )
            )
            cur = nxt
        return steps
    m = ring.m
    while m != ring.radical:
        m2 = 1
        for p, e in _factor_cached(m).items():
            m2 *= p ** ((e + 1) // 2)
        assert m % m2 == 0 and (m2 * m2) % m == 0  # kernel ideal squares to 0
        cur_ring = IntModRing(m)
        ok, checked, wit = (
            _check_abelian_kernel_mod(cur_ring, m2, samples, deg_cap, rng)
            if rng is not None
            else (True, 0, None)
        )
        steps.append(
            FiltrationStep(
                from_modulus=m,
                to_modulus=m2,
                from_exponent=None,
                to_exponent=None,
                kernel_abelian=ok,
                pairs_checked=checked,
                witness=wit,
            )
        )
        m = m2
    return steps


def _factor_cached(m: int) -> dict:
    return IntModRing(m)._factors if m > 1 else {}
