"""Coefficient rings with exact arithmetic and explicit q-adic structure.

Four kinds of ring are provided:

* ``IntegerRing`` -- arbitrary-precision integers, optionally with a
  distinguished prime q for valuations and exact division.
* ``IntModRing`` -- integers mod m.  When m = p^n the ring carries the
  q-adic structure q = p (valuations, canonical q-power multiples);
  composite m is supported for plain arithmetic and nilpotency tests.
* ``TruncSeriesRing`` -- truncated power series K[t]/(t^e) with K a prime
  field or the rationals; q = t.
* ``SymbolicRing`` -- multivariate polynomials over the integers in named
  generators, with at most one generator inverted (denominators are powers
  of that generator only) and an optional designated nilpotent generator q
  truncated at q^n.  The same kind doubles as a plain polynomial ring over
  the integers when the distinguished q is an integer prime instead of a
  generator (exact division then acts on the integer coefficients).

Values are immutable and kept in canonical form, so ``==`` is structural
equality and every element may be used as a dict key.  All operations are
pure; nothing here mutates shared state after construction.
"""

from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping, Optional, Sequence, Union

from .errors import (
    InfiniteCoefficientRing,
    NotAUnit,
    NotDivisible,
    PreconditionFailed,
    RingMismatch,
)

INFINITE_VAL = math.inf


def _as_int(s) -> int:
    if isinstance(s, int):
        return s
    return int(str(s), 10)


def _prime_power_split(m: int) -> Optional[tuple[int, int]]:
    """Return (p, n) with m = p^n and p prime, or None."""
    if m < 2:
        return None
    for p in _factorize(m):
        n = 0
        mm = m
        while mm % p == 0:
            mm //= p
            n += 1
        if mm == 1:
            return p, n
        return None
    return None


def _factorize(m: int) -> dict[int, int]:
    """Trial-division factorization; fine for the moduli this package is
    used with (acceptance suite stays below 10^10)."""
    out: dict[int, int] = {}
    d = 2
    while d * d <= m:
        while m % d == 0:
            out[d] = out.get(d, 0) + 1
            m //= d
        d += 1 if d == 2 else 2
    if m > 1:
        out[m] = out.get(m, 0) + 1
    return out


def _egcd(a: int, b: int) -> tuple[int, int, int]:
    old_r, r = a, b
    old_s, s = 1, 0
    old_t, t = 0, 1
    while r:
        qq = old_r // r
        old_r, r = r, old_r - qq * r
        old_s, s = s, old_s - qq * s
        old_t, t = t, old_t - qq * t
    return old_r, old_s, old_t


class Ring:
    """Abstract base.  Subclasses provide payload-level arithmetic; the
    thin :class:`RingElem` wrapper adds operator syntax on top."""

    kind: str = "?"

    # -- element plumbing -------------------------------------------------

    def elem(self, x) -> "RingElem":
        return RingElem(self, self.pay(x))

    def pay(self, x):
        """Coerce ``x`` (int, payload, or RingElem of this ring) to a
        payload value."""
        if isinstance(x, RingElem):
            if x.ring != self:
                raise RingMismatch(f"element of {x.ring} used in {self}")
            return x.value
        if isinstance(x, int):
            return self.from_int(x)
        return self.coerce_payload(x)

    def coerce_payload(self, x):
        raise PreconditionFailed(f"cannot interpret {x!r} in {self}")

    def zero(self):
        return self.from_int(0)

    def one(self):
        return self.from_int(1)

    # -- q-adic structure --------------------------------------------------

    @property
    def truncation(self) -> Optional[int]:
        """Exponent n with q^n = 0, or None when q is not nilpotent or the
        ring has no q at all."""
        return None

    @property
    def nilpotency_index(self) -> Optional[int]:
        """Smallest k with x^k = 0 for every nilpotent x, or None when the
        ring has no nilpotents to speak of."""
        return self.truncation

    def has_q(self) -> bool:
        return False

    def q_power(self, k: int):
        raise PreconditionFailed(f"{self} has no q-adic structure")

    def q_val(self, a) -> Union[int, float]:
        raise PreconditionFailed(f"{self} has no q-adic structure")

    def exact_div_q(self, a, k: int):
        raise PreconditionFailed(f"{self} has no q-adic structure")

    # -- sampling ----------------------------------------------------------

    def rand(self, rng):
        raise InfiniteCoefficientRing(f"cannot sample uniformly from {self}")

    def rand_unit(self, rng):
        raise InfiniteCoefficientRing(f"cannot sample uniformly from {self}")

    # -- serialization -----------------------------------------------------

    def descriptor(self) -> dict:
        raise NotImplementedError

    def payload_to_json(self, a):
        raise NotImplementedError

    def payload_from_json(self, j):
        raise NotImplementedError

    def __repr__(self):
        return self.describe()

    def describe(self) -> str:
        return self.kind


class RingElem:
    """A ring payload tagged with its ring.  Cheap enough for tests and
    public API; hot loops operate on raw payloads instead."""

    __slots__ = ("ring", "value")

    def __init__(self, ring: Ring, value):
        self.ring = ring
        self.value = value

    def _pay(self, other):
        return self.ring.pay(other)

    def __add__(self, other):
        return RingElem(self.ring, self.ring.add(self.value, self._pay(other)))

    __radd__ = __add__

    def __sub__(self, other):
        return RingElem(self.ring, self.ring.sub(self.value, self._pay(other)))

    def __rsub__(self, other):
        return RingElem(self.ring, self.ring.sub(self._pay(other), self.value))

    def __mul__(self, other):
        return RingElem(self.ring, self.ring.mul(self.value, self._pay(other)))

    __rmul__ = __mul__

    def __neg__(self):
        return RingElem(self.ring, self.ring.neg(self.value))

    def __pow__(self, k: int):
        if k < 0:
            raise PreconditionFailed("negative powers go through inv()")
        out = self.ring.one()
        base = self.value
        while k:
            if k & 1:
                out = self.ring.mul(out, base)
            base = self.ring.mul(base, base)
            k >>= 1
        return RingElem(self.ring, out)

    def inv(self) -> "RingElem":
        return RingElem(self.ring, self.ring.inv(self.value))

    def is_zero(self) -> bool:
        return self.ring.is_zero(self.value)

    def is_unit(self) -> bool:
        return self.ring.is_unit(self.value)

    def is_nilpotent(self) -> bool:
        return self.ring.is_nilpotent(self.value)

    def q_valuation(self):
        return self.ring.q_val(self.value)

    def exact_div_by_q(self, k: int = 1) -> "RingElem":
        return RingElem(self.ring, self.ring.exact_div_q(self.value, k))

    def to_json(self):
        return self.ring.payload_to_json(self.value)

    def __eq__(self, other):
        if isinstance(other, RingElem):
            return self.ring == other.ring and self.value == other.value
        if isinstance(other, int):
            return self.value == self.ring.from_int(other)
        return NotImplemented

    def __hash__(self):
        return hash((id(type(self.ring)), self.ring.describe(), _freeze(self.value)))

    def __repr__(self):
        return f"{self.ring.show(self.value)}"


def _freeze(v):
    if isinstance(v, dict):
        return tuple(sorted(v.items()))
    if isinstance(v, SymElem):
        return v._key()
    return v


# ---------------------------------------------------------------------------
# Integers


class IntegerRing(Ring):
    kind = "integers"

    def __init__(self, q: Optional[int] = None):
        if q is not None and q < 2:
            raise PreconditionFailed("q must be at least 2")
        self.q = q

    def __eq__(self, other):
        return isinstance(other, IntegerRing) and other.q == self.q

    def __hash__(self):
        return hash(("integers", self.q))

    def describe(self):
        return f"Z(q={self.q})" if self.q else "Z"

    def from_int(self, k: int) -> int:
        return k

    def coerce_payload(self, x):
        if isinstance(x, int):
            return x
        raise PreconditionFailed(f"not an integer: {x!r}")

    def add(self, a, b):
        return a + b

    def sub(self, a, b):
        return a - b

    def neg(self, a):
        return -a

    def mul(self, a, b):
        return a * b

    def is_zero(self, a):
        return a == 0

    def is_unit(self, a):
        return a in (1, -1)

    def is_nilpotent(self, a):
        return a == 0

    def inv(self, a):
        if a in (1, -1):
            return a
        raise NotAUnit(f"{a} is not a unit in Z")

    def has_q(self):
        return self.q is not None

    def q_power(self, k: int):
        self._need_q()
        return self.q ** k

    def q_val(self, a):
        self._need_q()
        if a == 0:
            return INFINITE_VAL
        v = 0
        q = self.q
        while a % q == 0:
            a //= q
            v += 1
        return v

    def exact_div_q(self, a, k: int):
        self._need_q()
        d = self.q ** k
        if a % d:
            raise NotDivisible(f"{a} is not divisible by {self.q}^{k}")
        return a // d

    def _need_q(self):
        if self.q is None:
            raise PreconditionFailed("no distinguished q was set for Z")

    def at_precision(self, n: int) -> "IntModRing":
        self._need_q()
        return IntModRing(self.q ** n, q=self.q)

    def descriptor(self):
        d = {"kind": "integers"}
        if self.q is not None:
            d["q"] = str(self.q)
        return d

    def payload_to_json(self, a):
        return str(a)

    def payload_from_json(self, j):
        return _as_int(j)

    def show(self, a):
        return str(a)


# ---------------------------------------------------------------------------
# Integers mod m


class IntModRing(Ring):
    kind = "zmod"

    def __init__(self, m: int, q: Optional[int] = None):
        if m < 2:
            raise PreconditionFailed("modulus must be at least 2")
        self.m = m
        split = _prime_power_split(m)
        if q is not None:
            if split is None or split[0] != q:
                raise PreconditionFailed(f"{m} is not a power of {q}")
        self.p, self.n = split if split else (None, None)
        self._factors = {self.p: self.n} if split else _factorize(m)
        self.radical = 1
        for pp in self._factors:
            self.radical *= pp
        self._nilpotency = max(self._factors.values())

    def __eq__(self, other):
        return isinstance(other, IntModRing) and other.m == self.m

    def __hash__(self):
        return hash(("zmod", self.m))

    def describe(self):
        return f"Z/{self.m}"

    @property
    def truncation(self):
        return self.n

    @property
    def nilpotency_index(self):
        return self._nilpotency

    def from_int(self, k: int) -> int:
        return k % self.m

    def coerce_payload(self, x):
        if isinstance(x, int):
            return x % self.m
        raise PreconditionFailed(f"not an integer: {x!r}")

    def add(self, a, b):
        return (a + b) % self.m

    def sub(self, a, b):
        return (a - b) % self.m

    def neg(self, a):
        return (-a) % self.m

    def mul(self, a, b):
        return (a * b) % self.m

    def is_zero(self, a):
        return a % self.m == 0

    def is_unit(self, a):
        return math.gcd(a, self.m) == 1

    def is_nilpotent(self, a):
        # a^k = 0 (mod m) eventually iff every prime of m divides a.
        return a % self.radical == 0

    def inv(self, a):
        g, s, _ = _egcd(a % self.m, self.m)
        if g != 1:
            raise NotAUnit(f"{a} is not a unit mod {self.m}")
        return s % self.m

    def has_q(self):
        return self.p is not None

    def _need_q(self):
        if self.p is None:
            raise PreconditionFailed(
                f"q-adic operations need a prime-power modulus, got {self.m}"
            )

    def q_power(self, k: int):
        self._need_q()
        return pow(self.p, k, self.m) if k < self.n else 0

    def q_val(self, a):
        """Largest k <= n with p^k | a; the truncation exponent n doubles
        as the valuation of zero."""
        self._need_q()
        a %= self.m
        if a == 0:
            return self.n
        v = 0
        p = self.p
        while a % p == 0:
            a //= p
            v += 1
        return v

    def exact_div_q(self, a, k: int):
        """Divide the canonical representative by p^k.  The result is only
        canonical in Z/p^(n-k); callers that care re-reduce there."""
        self._need_q()
        d = self.p ** k
        a %= self.m
        if a % d:
            raise NotDivisible(f"{a} is not divisible by {self.p}^{k} mod {self.m}")
        return a // d

    def at_precision(self, k: int) -> "IntModRing":
        self._need_q()
        return IntModRing(self.p ** k, q=self.p)

    def with_modulus(self, m2: int) -> "IntModRing":
        return IntModRing(m2)

    def rand(self, rng):
        return rng.randrange(self.m)

    def rand_unit(self, rng):
        while True:
            a = rng.randrange(1, self.m)
            if math.gcd(a, self.m) == 1:
                return a

    def descriptor(self):
        d = {"kind": "zmod", "m": str(self.m)}
        if self.p is not None:
            d["p"] = str(self.p)
            d["n"] = self.n
        return d

    def payload_to_json(self, a):
        return str(a % self.m)

    def payload_from_json(self, j):
        return _as_int(j) % self.m

    def show(self, a):
        return str(a % self.m)


# ---------------------------------------------------------------------------
# Truncated power series K[t]/(t^e)


class TruncSeriesRing(Ring):
    """K[t]/(t^e) with K = F_p or K = Q; payloads are coefficient tuples of
    length e, lowest degree first."""

    kind = "truncseries"

    def __init__(self, base: str, e: int, p: Optional[int] = None):
        if base not in ("fp", "rationals"):
            raise PreconditionFailed(f"unknown base field {base!r}")
        if base == "fp":
            if p is None or p < 2:
                raise PreconditionFailed("prime p required for an F_p base")
            if _prime_power_split(p) != (p, 1):
                raise PreconditionFailed(f"{p} is not prime")
        if e < 1:
            raise PreconditionFailed("truncation order must be positive")
        self.base = base
        self.p = p if base == "fp" else None
        self.e = e

    def __eq__(self, other):
        return (
            isinstance(other, TruncSeriesRing)
            and other.base == self.base
            and other.p == self.p
            and other.e == self.e
        )

    def __hash__(self):
        return hash(("truncseries", self.base, self.p, self.e))

    def describe(self):
        k = f"F_{self.p}" if self.base == "fp" else "Q"
        return f"{k}[t]/(t^{self.e})"

    @property
    def truncation(self):
        return self.e

    def _scalar(self, c):
        if self.base == "fp":
            if isinstance(c, int):
                return c % self.p
            if isinstance(c, Fraction) and c.denominator == 1:
                return c.numerator % self.p
            raise PreconditionFailed(f"bad F_{self.p} scalar {c!r}")
        if isinstance(c, (int, Fraction)):
            return Fraction(c)
        if isinstance(c, str):
            return Fraction(c)
        raise PreconditionFailed(f"bad rational scalar {c!r}")

    def from_int(self, k: int):
        z = self._szero()
        return (self._scalar(k),) + (z,) * (self.e - 1)

    def _szero(self):
        return 0 if self.base == "fp" else Fraction(0)

    def coerce_payload(self, x):
        if isinstance(x, (tuple, list)):
            cs = [self._scalar(c) for c in x]
            if len(cs) > self.e:
                if any(c != 0 for c in cs[self.e:]):
                    raise PreconditionFailed("series longer than truncation order")
                cs = cs[: self.e]
            cs += [self._szero()] * (self.e - len(cs))
            return tuple(cs)
        raise PreconditionFailed(f"not a coefficient sequence: {x!r}")

    def add(self, a, b):
        if self.base == "fp":
            p = self.p
            return tuple((x + y) % p for x, y in zip(a, b))
        return tuple(x + y for x, y in zip(a, b))

    def sub(self, a, b):
        if self.base == "fp":
            p = self.p
            return tuple((x - y) % p for x, y in zip(a, b))
        return tuple(x - y for x, y in zip(a, b))

    def neg(self, a):
        if self.base == "fp":
            p = self.p
            return tuple((-x) % p for x in a)
        return tuple(-x for x in a)

    def mul(self, a, b):
        e = self.e
        out = [self._szero()] * e
        for i, x in enumerate(a):
            if x == 0:
                continue
            for j, y in enumerate(b):
                if i + j >= e:
                    break
                out[i + j] += x * y
        if self.base == "fp":
            p = self.p
            return tuple(c % p for c in out)
        return tuple(out)

    def is_zero(self, a):
        return all(c == 0 for c in a)

    def is_unit(self, a):
        return a[0] != 0

    def is_nilpotent(self, a):
        return a[0] == 0

    def inv(self, a):
        """Power-series inversion by the standard recurrence."""
        if a[0] == 0:
            raise NotAUnit("constant term vanishes")
        e = self.e
        if self.base == "fp":
            c0inv = pow(a[0], -1, self.p)
        else:
            c0inv = Fraction(1) / a[0]
        out = [self._szero()] * e
        out[0] = c0inv if self.base == "rationals" else c0inv % self.p
        for k in range(1, e):
            acc = self._szero()
            for i in range(1, k + 1):
                acc += a[i] * out[k - i]
            val = -c0inv * acc
            out[k] = val % self.p if self.base == "fp" else val
        return tuple(out)

    def has_q(self):
        return True

    def q_power(self, k: int):
        z = self._szero()
        one = 1 if self.base == "fp" else Fraction(1)
        if k >= self.e:
            return (z,) * self.e
        return (z,) * k + (one,) + (z,) * (self.e - k - 1)

    def q_val(self, a):
        for i, c in enumerate(a):
            if c != 0:
                return i
        return self.e

    def exact_div_q(self, a, k: int):
        if any(c != 0 for c in a[:k]):
            raise NotDivisible(f"series has a nonzero coefficient below t^{k}")
        z = self._szero()
        return a[k:] + (z,) * k

    def at_precision(self, k: int) -> "TruncSeriesRing":
        return TruncSeriesRing(self.base, k, self.p)

    def rand(self, rng):
        if self.base != "fp":
            raise InfiniteCoefficientRing("cannot sample Q[t]/(t^e) uniformly")
        return tuple(rng.randrange(self.p) for _ in range(self.e))

    def rand_unit(self, rng):
        if self.base != "fp":
            raise InfiniteCoefficientRing("cannot sample Q[t]/(t^e) uniformly")
        first = rng.randrange(1, self.p)
        return (first,) + tuple(rng.randrange(self.p) for _ in range(self.e - 1))

    def descriptor(self):
        d = {"kind": "truncseries", "base": self.base, "e": self.e}
        if self.p is not None:
            d["p"] = str(self.p)
        return d

    def payload_to_json(self, a):
        return [str(c) for c in a]

    def payload_from_json(self, j):
        return self.coerce_payload([self._parse_scalar(s) for s in j])

    def _parse_scalar(self, s):
        if self.base == "fp":
            return _as_int(s)
        return Fraction(str(s))

    def show(self, a):
        parts = []
        for i, c in enumerate(a):
            if c == 0:
                continue
            if i == 0:
                parts.append(str(c))
            elif i == 1:
                parts.append(f"{c}*t" if c != 1 else "t")
            else:
                parts.append(f"{c}*t^{i}" if c != 1 else f"t^{i}")
        return " + ".join(parts) if parts else "0"


# ---------------------------------------------------------------------------
# Symbolic polynomials over Z, with one optional inverted generator


class SymElem:
    """Payload for :class:`SymbolicRing`: integer-coefficient terms keyed by
    exponent tuples, over a common denominator b^bk (b the inverted
    generator; bk is 0 when nothing is inverted).  Instances are canonical
    and treated as frozen."""

    __slots__ = ("terms", "bk", "_frozen")

    def __init__(self, terms: dict, bk: int):
        self.terms = terms
        self.bk = bk
        self._frozen = None

    def _key(self):
        if self._frozen is None:
            self._frozen = (self.bk, tuple(sorted(self.terms.items())))
        return self._frozen

    def __eq__(self, other):
        return isinstance(other, SymElem) and self._key() == other._key()

    def __hash__(self):
        return hash(self._key())

    def __repr__(self):
        return f"SymElem({self.terms!r}, bk={self.bk})"


class SymbolicRing(Ring):
    kind = "symbolic"

    def __init__(
        self,
        generators: Sequence[str],
        inverted: Optional[str] = None,
        q: Union[None, int, str] = None,
        trunc: Optional[int] = None,
    ):
        gens = tuple(generators)
        if len(set(gens)) != len(gens):
            raise PreconditionFailed("duplicate generator names")
        self.gens = gens
        self.gidx = {g: i for i, g in enumerate(gens)}
        if inverted is not None and inverted not in self.gidx:
            raise PreconditionFailed(f"inverted generator {inverted!r} unknown")
        self.inverted = inverted
        self.inv_idx = self.gidx[inverted] if inverted else None
        if isinstance(q, str):
            if q not in self.gidx:
                raise PreconditionFailed(f"q generator {q!r} unknown")
            if q == inverted:
                raise PreconditionFailed("q cannot be the inverted generator")
        if trunc is not None and not isinstance(q, str):
            raise PreconditionFailed("truncation requires q to be a generator")
        if trunc is not None and trunc < 1:
            raise PreconditionFailed("truncation exponent must be positive")
        self.q = q
        self.q_idx = self.gidx[q] if isinstance(q, str) else None
        self.trunc = trunc
        self._zero_exp = (0,) * len(gens)

    def __eq__(self, other):
        return (
            isinstance(other, SymbolicRing)
            and other.gens == self.gens
            and other.inverted == self.inverted
            and other.q == self.q
            and other.trunc == self.trunc
        )

    def __hash__(self):
        return hash(("symbolic", self.gens, self.inverted, self.q, self.trunc))

    def describe(self):
        inv = f", 1/{self.inverted}" if self.inverted else ""
        qq = f", q={self.q}" if self.q is not None else ""
        tt = f", q^{self.trunc}=0" if self.trunc else ""
        return f"Z[{', '.join(self.gens)}{inv}{qq}{tt}]"

    @property
    def truncation(self):
        return self.trunc

    # -- canonicalization --------------------------------------------------

    def _norm(self, terms: dict, bk: int) -> SymElem:
        qix = self.q_idx
        tr = self.trunc
        if tr is not None:
            terms = {e: c for e, c in terms.items() if c and e[qix] < tr}
        else:
            terms = {e: c for e, c in terms.items() if c}
        iix = self.inv_idx
        if bk and terms and iix is not None:
            shift = min(min(e[iix] for e in terms), bk)
            if shift:
                bk -= shift
                terms = {
                    e[:iix] + (e[iix] - shift,) + e[iix + 1:]: c
                    for e, c in terms.items()
                }
        if not terms:
            bk = 0
        return SymElem(terms, bk)

    def from_int(self, k: int) -> SymElem:
        if k == 0:
            return SymElem({}, 0)
        return SymElem({self._zero_exp: k}, 0)

    def gen(self, name: str) -> SymElem:
        i = self.gidx[name]
        e = self._zero_exp[:i] + (1,) + self._zero_exp[i + 1:]
        return SymElem({e: 1}, 0)

    def monomial(self, coeff: int, exps: Mapping[str, int], bk: int = 0) -> SymElem:
        e = list(self._zero_exp)
        for g, k in exps.items():
            e[self.gidx[g]] = k
        return self._norm({tuple(e): coeff}, bk)

    def coerce_payload(self, x):
        if isinstance(x, SymElem):
            return x
        raise PreconditionFailed(f"not a symbolic element: {x!r}")

    # -- arithmetic ----------------------------------------------------------

    def _scale_by_inv_gen(self, terms: dict, k: int) -> dict:
        if k == 0:
            return terms
        i = self.inv_idx
        return {e[:i] + (e[i] + k,) + e[i + 1:]: c for e, c in terms.items()}

    def add(self, a: SymElem, b: SymElem) -> SymElem:
        bk = max(a.bk, b.bk)
        ta = self._scale_by_inv_gen(a.terms, bk - a.bk)
        tb = self._scale_by_inv_gen(b.terms, bk - b.bk)
        out = dict(ta)
        for e, c in tb.items():
            nc = out.get(e, 0) + c
            if nc:
                out[e] = nc
            else:
                out.pop(e, None)
        return self._norm(out, bk)

    def neg(self, a: SymElem) -> SymElem:
        return SymElem({e: -c for e, c in a.terms.items()}, a.bk)

    def sub(self, a, b):
        return self.add(a, self.neg(b))

    def mul(self, a: SymElem, b: SymElem) -> SymElem:
        qix = self.q_idx
        tr = self.trunc
        out: dict = {}
        for e1, c1 in a.terms.items():
            for e2, c2 in b.terms.items():
                if tr is not None and e1[qix] + e2[qix] >= tr:
                    continue
                e = tuple(x + y for x, y in zip(e1, e2))
                nc = out.get(e, 0) + c1 * c2
                if nc:
                    out[e] = nc
                else:
                    out.pop(e, None)
        return self._norm(out, a.bk + b.bk)

    def is_zero(self, a):
        return not a.terms

    def is_nilpotent(self, a):
        if not a.terms:
            return True
        if self.q_idx is not None and self.trunc is not None:
            return all(e[self.q_idx] >= 1 for e in a.terms)
        return False

    def _q_free_part(self, a: SymElem) -> tuple[dict, dict]:
        """Split terms into (q-exponent zero, q-exponent positive)."""
        qix = self.q_idx
        base = {}
        rest = {}
        for e, c in a.terms.items():
            (base if e[qix] == 0 else rest)[e] = c
        return base, rest

    def is_unit(self, a):
        try:
            self.inv(a)
            return True
        except NotAUnit:
            return False

    def inv(self, a: SymElem) -> SymElem:
        """Units are (+/-) b^k, possibly plus a q-nilpotent tail when the
        ring is q-truncated; the tail is inverted by a finite geometric
        series."""
        if not a.terms:
            raise NotAUnit("zero is not a unit")
        if self.q_idx is not None and self.trunc is not None:
            base_terms, tail_terms = self._q_free_part(a)
        else:
            base_terms, tail_terms = dict(a.terms), {}
        u0 = self._invert_monomial_part(base_terms, a.bk)
        if not tail_terms:
            return u0
        tail = SymElem(tail_terms, a.bk)
        # (u + t)^-1 = u0 * sum_j (-t u0)^j  with u0 = u^-1
        x = self.mul(tail, u0)
        acc = self.from_int(1)
        term = self.from_int(1)
        for _ in range(1, self.trunc):
            term = self.neg(self.mul(term, x))
            if not term.terms:
                break
            acc = self.add(acc, term)
        return self.mul(u0, acc)

    def _invert_monomial_part(self, terms: dict, bk: int) -> SymElem:
        if len(terms) != 1:
            raise NotAUnit("q-free part is not a single monomial")
        (e, c), = terms.items()
        if c not in (1, -1):
            raise NotAUnit(f"coefficient {c} is not invertible over Z")
        iix = self.inv_idx
        for i, k in enumerate(e):
            if k and i != iix:
                raise NotAUnit(f"generator {self.gens[i]} is not inverted")
        if iix is None:
            return SymElem({self._zero_exp: c}, 0)
        # (c * b^j / b^bk)^-1 = c * b^bk / b^j
        j = e[iix]
        ne = e[:iix] + (bk,) + e[iix + 1:]
        return self._norm({ne: c}, j)

    # -- q-adic structure ----------------------------------------------------

    def has_q(self):
        return self.q is not None

    def q_power(self, k: int) -> SymElem:
        if isinstance(self.q, int):
            return self.from_int(self.q ** k)
        if self.q_idx is None:
            raise PreconditionFailed("no q in this ring")
        if self.trunc is not None and k >= self.trunc:
            return SymElem({}, 0)
        e = list(self._zero_exp)
        e[self.q_idx] = k
        return SymElem({tuple(e): 1}, 0)

    def q_val(self, a: SymElem):
        if isinstance(self.q, int):
            if not a.terms:
                return INFINITE_VAL
            q = self.q
            best = None
            for c in a.terms.values():
                v = 0
                c = abs(c)
                while c % q == 0:
                    c //= q
                    v += 1
                best = v if best is None else min(best, v)
                if best == 0:
                    return 0
            return best
        if self.q_idx is None:
            raise PreconditionFailed("no q in this ring")
        if not a.terms:
            return self.trunc if self.trunc is not None else INFINITE_VAL
        return min(e[self.q_idx] for e in a.terms)

    def exact_div_q(self, a: SymElem, k: int) -> SymElem:
        if isinstance(self.q, int):
            d = self.q ** k
            out = {}
            for e, c in a.terms.items():
                if c % d:
                    raise NotDivisible(
                        f"coefficient {c} is not divisible by {self.q}^{k}"
                    )
                out[e] = c // d
            return SymElem(out, a.bk)
        if self.q_idx is None:
            raise PreconditionFailed("no q in this ring")
        qix = self.q_idx
        out = {}
        for e, c in a.terms.items():
            if e[qix] < k:
                raise NotDivisible(f"term with q-exponent {e[qix]} < {k}")
            out[e[:qix] + (e[qix] - k,) + e[qix + 1:]] = c
        return self._norm(out, a.bk)

    def at_precision(self, k: int) -> "SymbolicRing":
        if self.q_idx is None:
            raise PreconditionFailed("truncation requires a q generator")
        return SymbolicRing(self.gens, self.inverted, self.q, k)

    # -- substitution ----------------------------------------------------------

    def substitute(self, a: SymElem, target: Ring, assignment: Mapping[str, object]):
        """Evaluate ``a`` in ``target`` with every generator assigned a
        payload value there.  The inverted generator's assignment must be a
        unit in the target."""
        vals = []
        for g in self.gens:
            if g not in assignment:
                raise PreconditionFailed(f"no value for generator {g}")
            vals.append(target.pay(assignment[g]))
        total = target.zero()
        for e, c in a.terms.items():
            term = target.from_int(c)
            for v, k in zip(vals, e):
                if k:
                    term = target.mul(term, _pow_payload(target, v, k))
            total = target.add(total, term)
        if a.bk:
            binv = target.inv(vals[self.inv_idx])
            total = target.mul(total, _pow_payload(target, binv, a.bk))
        return total

    # -- sampling / serialization ----------------------------------------------

    def descriptor(self):
        d: dict = {"kind": "symbolic", "generators": list(self.gens)}
        if self.inverted:
            d["inverted"] = self.inverted
        if self.q is not None:
            d["q"] = str(self.q)
        if self.trunc is not None:
            d["n"] = self.trunc
        return d

    def payload_to_json(self, a: SymElem):
        terms = []
        for e, c in sorted(a.terms.items()):
            exps = {g: k for g, k in zip(self.gens, e) if k}
            terms.append({"coeff": str(c), "exponents": exps})
        out = {"terms": terms}
        if a.bk:
            out["b_denominator"] = a.bk
        return out

    def payload_from_json(self, j):
        terms: dict = {}
        for t in j.get("terms", []):
            e = list(self._zero_exp)
            for g, k in t.get("exponents", {}).items():
                e[self.gidx[g]] = int(k)
            terms[tuple(e)] = terms.get(tuple(e), 0) + _as_int(t["coeff"])
        return self._norm(terms, int(j.get("b_denominator", 0)))

    def show(self, a: SymElem):
        if not a.terms:
            return "0"
        parts = []
        for e, c in sorted(a.terms.items(), reverse=True):
            factors = []
            for g, k in zip(self.gens, e):
                if k == 1:
                    factors.append(g)
                elif k > 1:
                    factors.append(f"{g}^{k}")
            if not factors:
                parts.append(str(c))
            elif c == 1:
                parts.append("*".join(factors))
            elif c == -1:
                parts.append("-" + "*".join(factors))
            else:
                parts.append(f"{c}*" + "*".join(factors))
        s = " + ".join(parts).replace("+ -", "- ")
        if a.bk:
            s = f"({s})/{self.inverted}^{a.bk}" if a.bk > 1 else f"({s})/{self.inverted}"
        return s


def _pow_payload(ring: Ring, v, k: int):
    out = ring.one()
    while k:
        if k & 1:
            out = ring.mul(out, v)
        v = ring.mul(v, v)
        k >>= 1
    return out


# ---------------------------------------------------------------------------
# descriptor round-trip


def ring_from_descriptor(d: Mapping) -> Ring:
    kind = d["kind"]
    if kind == "integers":
        return IntegerRing(q=_as_int(d["q"]) if "q" in d else None)
    if kind == "zmod":
        return IntModRing(_as_int(d["m"]), q=_as_int(d["p"]) if "p" in d else None)
    if kind == "truncseries":
        return TruncSeriesRing(
            d["base"], int(d["e"]), p=_as_int(d["p"]) if d.get("p") else None
        )
    if kind == "symbolic":
        q = d.get("q")
        if q is not None:
            q = int(q) if str(q).isdigit() else str(q)
        return SymbolicRing(
            d["generators"],
            inverted=d.get("inverted"),
            q=q,
            trunc=d.get("n"),
        )
    raise PreconditionFailed(f"unknown ring kind {kind!r}")


def parse_ring_flag(flag: str) -> Ring:
    """Parse the command-line ring grammar:

    * ``zmod:<m>`` or ``zmod:<m>:q=<p>``
    * ``tq:<p>:<e>`` (series over F_p) or ``tq:Q:<e>`` (over the rationals)
    * ``sym`` (the ring with a,b,c,d,e, 1/b and nilpotent q), optionally
      ``sym:n=<k>`` to truncate at q^k
    """
    parts = flag.split(":")
    if parts[0] == "zmod":
        if len(parts) < 2:
            raise PreconditionFailed("zmod needs a modulus: zmod:<m>[:q=<p>]")
        m = _as_int(parts[1])
        q = None
        for extra in parts[2:]:
            if extra.startswith("q="):
                q = _as_int(extra[2:])
            else:
                raise PreconditionFailed(f"bad zmod option {extra!r}")
        return IntModRing(m, q=q)
    if parts[0] == "tq":
        if len(parts) != 3:
            raise PreconditionFailed("series grammar: tq:<p|Q>:<e>")
        if parts[1] in ("Q", "q", "rationals"):
            return TruncSeriesRing("rationals", int(parts[2]))
        return TruncSeriesRing("fp", int(parts[2]), p=_as_int(parts[1]))
    if parts[0] == "sym":
        trunc = None
        for extra in parts[1:]:
            if extra.startswith("n="):
                trunc = int(extra[2:])
            else:
                raise PreconditionFailed(f"bad sym option {extra!r}")
        return universal_coefficient_ring(trunc)
    raise PreconditionFailed(f"unknown ring flag {flag!r}")


def universal_coefficient_ring(trunc: Optional[int] = None) -> SymbolicRing:
    """Z[a, b, c, d, e, 1/b][q], optionally with q^trunc = 0.  This is the
    coefficient ring used for symbolic adjoint matrices."""
    return SymbolicRing(
        ("a", "b", "c", "d", "e", "q"), inverted="b", q="q", trunc=trunc
    )


# Convenience functions mirroring the element methods, for callers that
# prefer a functional style.


def add(x: RingElem, y: RingElem) -> RingElem:
    return x + y


def mul(x: RingElem, y: RingElem) -> RingElem:
    return x * y


def inv(x: RingElem) -> RingElem:
    return x.inv()


def exact_div_by_q(x: RingElem, k: int = 1) -> RingElem:
    return x.exact_div_by_q(k)


def q_valuation(x: RingElem):
    return x.q_valuation()
