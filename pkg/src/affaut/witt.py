"""p-typical Witt vectors of finite length.

The single source of truth for the arithmetic is the ghost map: the
component sequence [u_0, ..., u_n] has ghost components

    w_j(u) = sum_{i<=j} p^i * u_i^(p^(j-i)),

and addition/multiplication are the unique component operations making
the ghost map a ring homomorphism.  Over p-torsion-free rings (integers,
integer polynomial rings) the operations are computed directly by
combining ghosts and back-solving with exact division.  Over Z/p^k the
components are lifted canonically to the integers, combined there, and
reduced, which evaluates the universal integral laws without ever
expanding them.

The universal law polynomials themselves come out of the same engine run
on symbolic component vectors; they are derived, cached, and checked
against their defining equations rather than copied from anywhere.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence, Tuple

from .errors import (
    IntegralityViolation,
    NotDivisible,
    PreconditionFailed,
    RingMismatch,
    ShapeMismatch,
)
from .rings import (
    IntegerRing,
    IntModRing,
    Ring,
    RingElem,
    SymbolicRing,
)


def _is_torsion_free(ring: Ring) -> bool:
    return isinstance(ring, (IntegerRing, SymbolicRing))


def _pow(ring: Ring, a, e: int):
    acc = ring.one()
    base = a
    while e:
        if e & 1:
            acc = ring.mul(acc, base)
        e >>= 1
        if e:
            base = ring.mul(base, base)
    return acc


# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class WittVec:
    """Component vector of length n+1 with entries in a stated base ring
    (payload form)."""

    p: int
    ring: Ring
    components: Tuple

    def __post_init__(self):
        if len(self.components) < 1:
            raise ShapeMismatch("a Witt vector needs at least one component")

    @classmethod
    def make(cls, p: int, ring: Ring, values: Sequence) -> "WittVec":
        return cls(p, ring, tuple(ring.pay(v) for v in values))

    @property
    def level(self) -> int:
        return len(self.components) - 1

    def elems(self) -> Tuple[RingElem, ...]:
        return tuple(RingElem(self.ring, c) for c in self.components)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "ring": self.ring.descriptor(),
            "components": [self.ring.payload_to_json(c) for c in self.components],
        }

    @classmethod
    def from_json(cls, j: dict) -> "WittVec":
        from .rings import ring_from_descriptor

        ring = ring_from_descriptor(j["ring"])
        return cls(
            j["p"], ring, tuple(ring.payload_from_json(c) for c in j["components"])
        )


def _check_shapes(u: WittVec, v: WittVec):
    if u.p != v.p:
        raise ShapeMismatch(f"p mismatch: {u.p} vs {v.p}")
    if len(u.components) != len(v.components):
        raise ShapeMismatch(
            f"length mismatch: {len(u.components)} vs {len(v.components)}"
        )
    if u.ring != v.ring:
        raise RingMismatch(f"{u.ring} vs {v.ring}")


# ---------------------------------------------------------------------------
# ghost map and its inverse over torsion-free rings


def witt_polynomial(p: int, j: int, prefix: str = "x") -> RingElem:
    """w_j as an integer polynomial in x_0 ... x_j."""
    if j < 0:
        raise PreconditionFailed("negative index")
    ring = SymbolicRing(tuple(f"{prefix}{i}" for i in range(j + 1)), q=p)
    acc = ring.zero()
    for i in range(j + 1):
        gi = ring.gen(f"{prefix}{i}")
        acc = ring.add(acc, ring.mul(ring.from_int(p ** i), _pow(ring, gi, p ** (j - i))))
    return RingElem(ring, acc)


def ghost_components(u: WittVec) -> Tuple:
    """[w_0(u), ..., w_n(u)] as payloads of the base ring.  Defined over
    any ring; a homomorphism only when the ring is p-torsion free."""
    ring = u.ring
    p = u.p
    out = []
    for j in range(len(u.components)):
        acc = ring.zero()
        for i in range(j + 1):
            term = ring.mul(
                ring.from_int(p ** i), _pow(ring, u.components[i], p ** (j - i))
            )
            acc = ring.add(acc, term)
        out.append(acc)
    return tuple(out)


def ghost_map(u: WittVec) -> Tuple[RingElem, ...]:
    return tuple(RingElem(u.ring, c) for c in ghost_components(u))


def _exact_div_int(ring: Ring, a, k: int, p: int):
    """a / p^k with integrality asserted."""
    if k == 0:
        return a
    if isinstance(ring, IntegerRing):
        d = p ** k
        if a % d:
            raise IntegralityViolation(f"{a} is not divisible by {p}^{k}")
        return a // d
    try:
        return ring.exact_div_q(a, k)
    except NotDivisible as e:
        raise IntegralityViolation(str(e)) from None


def unghost(p: int, ring: Ring, ghost: Sequence) -> WittVec:
    """Solve for the components with the given ghost sequence; needs a
    p-torsion-free ring so each division is exact."""
    if not _is_torsion_free(ring):
        raise PreconditionFailed(f"unghost needs a p-torsion-free ring, got {ring}")
    if isinstance(ring, SymbolicRing) and ring.q != p:
        raise PreconditionFailed(
            f"symbolic unghost needs the ring constructed with q={p}"
        )
    comps = []
    for j, g in enumerate(ghost):
        acc = ring.pay(g)
        for i in range(j):
            acc = ring.sub(
                acc, ring.mul(ring.from_int(p ** i), _pow(ring, comps[i], p ** (j - i)))
            )
        comps.append(_exact_div_int(ring, acc, j, p))
    return WittVec(p, ring, tuple(comps))


# ---------------------------------------------------------------------------
# arithmetic


def _lift_vec(u: WittVec) -> WittVec:
    zr = IntegerRing(q=u.p)
    return WittVec(u.p, zr, tuple(int(c) for c in u.components))


def _reduce_vec(u: WittVec, ring: Ring) -> WittVec:
    return WittVec(u.p, ring, tuple(ring.from_int(c) for c in u.components))


def _combine(u: WittVec, v: WittVec, op: str) -> WittVec:
    _check_shapes(u, v)
    ring = u.ring
    if _is_torsion_free(ring):
        gu = ghost_components(u)
        gv = ghost_components(v)
        joined = [
            ring.add(a, b) if op == "add" else ring.mul(a, b)
            for a, b in zip(gu, gv)
        ]
        return unghost(u.p, ring, joined)
    if isinstance(ring, IntModRing):
        lifted = _combine(_lift_vec(u), _lift_vec(v), op)
        return _reduce_vec(lifted, ring)
    raise PreconditionFailed(f"Witt arithmetic is not defined over {ring}")


def witt_add(u: WittVec, v: WittVec) -> WittVec:
    return _combine(u, v, "add")


def witt_mul(u: WittVec, v: WittVec) -> WittVec:
    return _combine(u, v, "mul")


def witt_neg(u: WittVec) -> WittVec:
    ring = u.ring
    if _is_torsion_free(ring):
        gu = ghost_components(u)
        return unghost(u.p, ring, tuple(ring.neg(g) for g in gu))
    if isinstance(ring, IntModRing):
        return _reduce_vec(witt_neg(_lift_vec(u)), ring)
    raise PreconditionFailed(f"Witt arithmetic is not defined over {ring}")


def witt_zero(p: int, ring: Ring, length: int) -> WittVec:
    return WittVec(p, ring, (ring.zero(),) * length)


def witt_one(p: int, ring: Ring, length: int) -> WittVec:
    return WittVec(p, ring, (ring.one(),) + (ring.zero(),) * (length - 1))


def integer_witt(c: int, p: int, ring: Ring, length: int) -> WittVec:
    """The image of the integer c under the unique ring map into Witt
    vectors: the vector with constant ghost (c, c, ..., c)."""
    if _is_torsion_free(ring):
        return unghost(p, ring, (ring.from_int(c),) * length)
    if isinstance(ring, IntModRing):
        zr = IntegerRing(q=p)
        return _reduce_vec(unghost(p, zr, (c,) * length), ring)
    raise PreconditionFailed(f"Witt arithmetic is not defined over {ring}")


# ---------------------------------------------------------------------------
# the universal laws


@dataclass(frozen=True)
class UniversalWittLaw:
    """Integer polynomials s_0..s_n and m_0..m_n in x_0..x_n, y_0..y_n
    satisfying w_j(s) = w_j(x) + w_j(y) and w_j(m) = w_j(x) * w_j(y)."""

    p: int
    level: int
    ring: SymbolicRing
    sum_polys: Tuple
    prod_polys: Tuple

    def sum_elems(self) -> Tuple[RingElem, ...]:
        return tuple(RingElem(self.ring, c) for c in self.sum_polys)

    def prod_elems(self) -> Tuple[RingElem, ...]:
        return tuple(RingElem(self.ring, c) for c in self.prod_polys)

    def _subst(self, poly, target: Ring, xs: Sequence, ys: Sequence):
        assignment = {}
        for i, v in enumerate(xs):
            assignment[f"x{i}"] = target.pay(v)
        for i, v in enumerate(ys):
            assignment[f"y{i}"] = target.pay(v)
        return self.ring.substitute(poly, target, assignment)

    def evaluate_sum(self, u: WittVec, v: WittVec) -> WittVec:
        _check_shapes(u, v)
        comps = tuple(
            self._subst(s, u.ring, u.components, v.components)
            for s in self.sum_polys
        )
        return WittVec(u.p, u.ring, comps)

    def evaluate_mul(self, u: WittVec, v: WittVec) -> WittVec:
        _check_shapes(u, v)
        comps = tuple(
            self._subst(s, u.ring, u.components, v.components)
            for s in self.prod_polys
        )
        return WittVec(u.p, u.ring, comps)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "level": self.level,
            "sum": [self.ring.payload_to_json(c) for c in self.sum_polys],
            "prod": [self.ring.payload_to_json(c) for c in self.prod_polys],
        }

    @classmethod
    def from_json(cls, j: dict) -> "UniversalWittLaw":
        ring = _law_ring(j["p"], j["level"])
        return cls(
            p=j["p"],
            level=j["level"],
            ring=ring,
            sum_polys=tuple(ring.payload_from_json(c) for c in j["sum"]),
            prod_polys=tuple(ring.payload_from_json(c) for c in j["prod"]),
        )


def _law_ring(p: int, n: int) -> SymbolicRing:
    names = tuple(f"x{i}" for i in range(n + 1)) + tuple(
        f"y{i}" for i in range(n + 1)
    )
    return SymbolicRing(names, q=p)


_LAW_CACHE: dict = {}


def derive_witt_laws(p: int, level: int) -> UniversalWittLaw:
    """Run the ghost-solve engine on fully symbolic component vectors; the
    components of the symbolic sum/product are the universal laws.  Cached
    per (p, level); the cache is never mutated afterwards."""
    key = (p, level)
    got = _LAW_CACHE.get(key)
    if got is not None:
        return got
    ring = _law_ring(p, level)
    xs = WittVec(p, ring, tuple(ring.gen(f"x{i}") for i in range(level + 1)))
    ys = WittVec(p, ring, tuple(ring.gen(f"y{i}") for i in range(level + 1)))
    s = witt_add(xs, ys)
    m = witt_mul(xs, ys)
    law = UniversalWittLaw(
        p=p, level=level, ring=ring, sum_polys=s.components,
        prod_polys=m.components,
    )
    # the defining system, verified symbolically before the law is trusted
    sg = ghost_components(s)
    xg = ghost_components(xs)
    yg = ghost_components(ys)
    mg = ghost_components(m)
    for j in range(level + 1):
        if not ring.is_zero(ring.sub(sg[j], ring.add(xg[j], yg[j]))):
            raise IntegralityViolation(f"sum law violates ghost equation {j}")
        if not ring.is_zero(ring.sub(mg[j], ring.mul(xg[j], yg[j]))):
            raise IntegralityViolation(f"product law violates ghost equation {j}")
    _LAW_CACHE[key] = law
    return law


# ---------------------------------------------------------------------------
# the residue-ring identification


def witt_to_residue(u: WittVec) -> RingElem:
    """Send [u_0..u_n] over F_p to w_n of its canonical integer lifts in
    Z/p^(n+1); a ring isomorphism from length-(n+1) vectors."""
    p = u.p
    n = u.level
    if not isinstance(u.ring, (IntModRing, IntegerRing)):
        raise PreconditionFailed("residue identification needs integer components")
    target = IntModRing(p ** (n + 1), q=p)
    lifts = [int(c) % p for c in u.components]
    total = 0
    for i, c in enumerate(lifts):
        total += p ** i * c ** (p ** (n - i))
    return RingElem(target, target.from_int(total))


def residue_to_witt(x, p: Optional[int] = None, level: Optional[int] = None) -> WittVec:
    """Inverse of witt_to_residue by greedy digit extraction."""
    if isinstance(x, RingElem):
        ring = x.ring
        if not isinstance(ring, IntModRing) or ring.p is None:
            raise PreconditionFailed("need an element of Z/p^(n+1)")
        p = ring.p
        level = ring.n - 1
        val = x.value
    else:
        if p is None or level is None:
            raise PreconditionFailed("plain integers need explicit p and level")
        ring = IntModRing(p ** (level + 1), q=p)
        val = ring.from_int(x)
    base = IntModRing(p, q=p)
    comps = []
    m = p ** (level + 1)
    for k in range(level + 1):
        partial = val
        for i, c in enumerate(comps):
            partial = (partial - p ** i * c ** (p ** (level - i))) % m
        if partial % p ** k:
            raise IntegralityViolation("digit extraction left a non-divisible rest")
        comps.append((partial // p ** k) % p)
    return WittVec(p, base, tuple(comps))
