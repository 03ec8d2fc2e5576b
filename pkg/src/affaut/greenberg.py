"""Component-level transforms: rewriting polynomial maps over Z/p^k as
polynomial systems over F_p in Witt coordinates, and machine generation
of composition laws for automorphism subgroups in those coordinates.

The engine is deliberately single-minded: every law is produced by
running Witt arithmetic on symbolic component vectors over the integers
and only reducing mod p at the very end.  Nothing is copied from a
formula table; closure facts (composite coefficients vanishing beyond
the degree budget, forced zero slots) are asserted during generation,
so a generated law is itself a machine-checked closure proof.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

from .errors import (
    NoSolution,
    PreconditionFailed,
    ShapeMismatch,
)
from .rings import IntModRing, RingElem, SymbolicRing, SymElem
from .witt import (
    WittVec,
    integer_witt,
    residue_to_witt,
    witt_add,
    witt_mul,
    witt_to_residue,
    witt_zero,
)

# ---------------------------------------------------------------------------
# mod-p simplification of integer polynomials
#
# Sound and complete for F_p-point equality: dropping p-divisible terms
# and reducing exponents e >= 1 to ((e-1) mod (p-1)) + 1 maps a
# polynomial to the canonical representative of the function it induces
# on F_p points, so two polynomials agree pointwise iff they simplify
# identically.


def simplify_mod_p(ring: SymbolicRing, a: SymElem, p: int) -> SymElem:
    if a.bk:
        raise PreconditionFailed("cannot simplify with inverted-generator tails")
    out: dict = {}
    for e, c in a.terms.items():
        c %= p
        if c == 0:
            continue
        ne = tuple(((k - 1) % (p - 1)) + 1 if k >= 1 else 0 for k in e)
        nc = (out.get(ne, 0) + c) % p
        if nc:
            out[ne] = nc
        else:
            out.pop(ne, None)
    return ring._norm(out, 0)


def _pointwise_zero(ring: SymbolicRing, a: SymElem, p: int) -> bool:
    return not simplify_mod_p(ring, a, p).terms


# ---------------------------------------------------------------------------
# polynomials whose coefficients are Witt vectors


def _witt_poly_mul(a: List[WittVec], b: List[WittVec], p, ring, length):
    out = [witt_zero(p, ring, length) for _ in range(len(a) + len(b) - 1)]
    for i, u in enumerate(a):
        for j, v in enumerate(b):
            out[i + j] = witt_add(out[i + j], witt_mul(u, v))
    return out


def _witt_poly_compose(fs: List[WittVec], gs: List[WittVec], p, ring, length):
    """Coefficients of f(g(T)) where both are polynomials with Witt-vector
    coefficients; plain Horner."""
    acc = [fs[-1]]
    for i in range(len(fs) - 2, -1, -1):
        acc = _witt_poly_mul(acc, gs, p, ring, length)
        acc[0] = witt_add(acc[0], fs[i])
    return acc


def _witt_pow(u: WittVec, e: int, p, ring, length) -> WittVec:
    acc = integer_witt(1, p, ring, length)
    base = u
    while e:
        if e & 1:
            acc = witt_mul(acc, base)
        e >>= 1
        if e:
            base = witt_mul(base, base)
    return acc


# ---------------------------------------------------------------------------
# the polynomial transform


@dataclass(frozen=True)
class ComponentSystem:
    """g_0 ... g_n with g_i giving component i of evaluating the source
    polynomial through Witt arithmetic on component vectors."""

    p: int
    level: int
    var_names: Tuple[str, ...]
    source_ring: SymbolicRing
    source_poly: SymElem
    ring: SymbolicRing
    polys: Tuple[SymElem, ...]

    def component_names(self, var: str) -> Tuple[str, ...]:
        return tuple(f"{var}_{k}" for k in range(self.level + 1))

    def evaluate(self, values: Dict[str, int]) -> WittVec:
        """Evaluate every g_i at F_p component values; returns the result
        as a vector over F_p."""
        base = IntModRing(self.p, q=self.p)
        assignment = {g: base.from_int(values[g]) for g in self.ring.gens}
        comps = tuple(
            self.ring.substitute(g, base, assignment) for g in self.polys
        )
        return WittVec(self.p, base, comps)

    def to_json(self) -> dict:
        return {
            "p": self.p,
            "level": self.level,
            "variables": list(self.var_names),
            "source": self.source_ring.payload_to_json(self.source_poly),
            "components": [self.ring.payload_to_json(g) for g in self.polys],
        }


def greenberg_transform(f: RingElem, p: int, level: int) -> ComponentSystem:
    """Rewrite an integer polynomial as component polynomials: feed each
    variable in as a fully symbolic component vector and evaluate f with
    Witt arithmetic."""
    src = f.ring
    if not isinstance(src, SymbolicRing):
        raise PreconditionFailed("the input lives in a symbolic polynomial ring")
    if src.inverted is not None or f.value.bk:
        raise PreconditionFailed("inverted generators are not supported here")
    names = []
    for v in src.gens:
        names.extend(f"{v}_{k}" for k in range(level + 1))
    cring = SymbolicRing(tuple(names), q=p)
    vecs = {
        v: WittVec(
            p, cring, tuple(cring.gen(f"{v}_{k}") for k in range(level + 1))
        )
        for v in src.gens
    }
    total = witt_zero(p, cring, level + 1)
    for e, c in f.value.terms.items():
        term = integer_witt(c, p, cring, level + 1)
        for v, k in zip(src.gens, e):
            if k:
                term = witt_mul(term, _witt_pow(vecs[v], k, p, cring, level + 1))
        total = witt_add(total, term)
    return ComponentSystem(
        p=p,
        level=level,
        var_names=src.gens,
        source_ring=src,
        source_poly=f.value,
        ring=cring,
        polys=total.components,
    )


# ---------------------------------------------------------------------------
# coordinate schemes for automorphism subgroups
#
# A coefficient of T^j is carried as a Witt vector over F_p whose first
# few slots are pinned to zero, encoding its forced p-divisibility.  The
# free slots are the coordinates.


def shape_coordinate_scheme(d: int) -> List[Tuple[int, int]]:
    """(coefficient index, slot) pairs for the degree-d shape-bounded
    subgroup at ring precision d: coefficient j carries q^(j-1), so its
    first j-1 slots are pinned."""
    if d < 1:
        raise PreconditionFailed("degree bound must be at least 1")
    coords = []
    for j in range(d + 1):
        for slot in range(max(0, j - 1), d):
            coords.append((j, slot))
    return coords


def capped_filtered_valuation(degree_cap: int, j: int, precision: int) -> int:
    """Pinned slot count for the T^j coefficient of a degree-filtered
    automorphism at the given ring precision; same rule as membership in
    the filtered subgroup."""
    from .autgroup import atilde_coefficient_valuation

    if j < 2:
        return 0
    return atilde_coefficient_valuation(degree_cap, j, precision)


def capped_coordinate_scheme(degree_cap: int, precision: int) -> List[Tuple[int, int]]:
    if degree_cap < 1 or precision < 2:
        raise PreconditionFailed("need degree_cap >= 1 and precision >= 2")
    max_deg = degree_cap * 2 ** (precision - 2)
    coords = []
    for j in range(max_deg + 1):
        pin = capped_filtered_valuation(degree_cap, j, precision)
        for slot in range(pin, precision):
            coords.append((j, slot))
    return coords


# ---------------------------------------------------------------------------
# group laws


@dataclass(frozen=True)
class GroupLaw:
    """Composition written as polynomials over F_p in the coordinates of
    the left factor and the primed coordinates of the right factor."""

    p: int
    descriptor: dict
    length: int                      # Witt vector length = ring precision
    scheme: Tuple[Tuple[int, int], ...]
    coordinates: Tuple[str, ...]     # includes "y" last when has_aux
    unit_coordinate: str
    has_aux: bool
    ring: SymbolicRing
    laws: Tuple[SymElem, ...]        # simplified, aligned with coordinates
    raw_laws: Tuple[SymElem, ...]    # over Z, before the mod-p pass
    relation: Optional[SymElem]
    _compiled: tuple = field(default=None, repr=False, compare=False)

    # -- point arithmetic over F_p ------------------------------------------

    def _compile(self):
        if object.__getattribute__(self, "_compiled") is not None:
            return self._compiled
        idx = {g: i for i, g in enumerate(self.ring.gens)}
        progs = []
        for law in self.laws:
            terms = []
            for e, c in sorted(law.terms.items()):
                powers = tuple((i, k) for i, k in enumerate(e) if k)
                terms.append((c, powers))
            progs.append(tuple(terms))
        compiled = (idx, tuple(progs))
        object.__setattr__(self, "_compiled", compiled)
        return compiled

    def identity_point(self) -> Tuple[int, ...]:
        out = []
        for name, (j, slot) in zip(self.coordinates, self.scheme):
            out.append(1 if (j, slot) == (1, 0) else 0)
        if self.has_aux:
            out.append(1)
        return tuple(out)

    def is_valid_point(self, t: Sequence[int]) -> bool:
        if len(t) != len(self.coordinates):
            return False
        if any(not 0 <= v < self.p for v in t):
            return False
        unit = t[self.coordinates.index(self.unit_coordinate)]
        if unit % self.p == 0:
            return False
        if self.has_aux and (unit * t[-1]) % self.p != 1:
            return False
        return True

    def compose_points(
        self, left: Sequence[int], right: Sequence[int]
    ) -> Tuple[int, ...]:
        if len(left) != len(self.coordinates) or len(right) != len(self.coordinates):
            raise ShapeMismatch("point arity does not match the coordinate list")
        _, progs = self._compile()
        # generator order is left coords, right coords, then y, y'
        if self.has_aux:
            values = (
                list(left[:-1]) + list(right[:-1]) + [left[-1], right[-1]]
            )
        else:
            values = list(left) + list(right)
        p = self.p
        out = []
        for prog in progs:
            total = 0
            for c, powers in prog:
                term = c
                for i, k in powers:
                    term = term * pow(values[i], k, p)
                total += term
            out.append(total % p)
        return tuple(out)

    # -- the dictionary between points and polynomial maps -------------------

    def point_to_aut(self, t: Sequence[int]):
        from .autgroup import TruncPoly

        if not self.is_valid_point(t):
            raise PreconditionFailed("not a valid coordinate tuple")
        ring = IntModRing(self.p ** self.length, q=self.p)
        top = max(j for j, _ in self.scheme)
        digits = {j: [0] * self.length for j in range(top + 1)}
        for val, (j, slot) in zip(t, self.scheme):
            digits[j][slot] = val
        base = IntModRing(self.p, q=self.p)
        coeffs = []
        for j in range(top + 1):
            vec = WittVec.make(self.p, base, digits[j])
            coeffs.append(int(witt_to_residue(vec).value))
        return TruncPoly(ring, coeffs)

    def aut_to_point(self, f) -> Tuple[int, ...]:
        ring = f.ring
        if not isinstance(ring, IntModRing) or ring.p != self.p or ring.n != self.length:
            raise PreconditionFailed(
                f"expected a polynomial over Z/{self.p}^{self.length}"
            )
        top = max(j for j, _ in self.scheme)
        if f.degree() is not None and f.degree() > top:
            raise ShapeMismatch("degree exceeds the coordinate scheme")
        free = {}
        for j, slot in self.scheme:
            free.setdefault(j, set()).add(slot)
        digits = {}
        for j in range(top + 1):
            vec = residue_to_witt(f.coeff(j))
            digits[j] = [int(c) for c in vec.components]
            for slot in range(self.length):
                if slot not in free.get(j, set()) and digits[j][slot]:
                    raise ShapeMismatch(
                        f"coefficient of T^{j} has forced slot {slot} set"
                    )
        out = [digits[j][slot] for j, slot in self.scheme]
        if self.has_aux:
            unit = out[self.coordinates.index(self.unit_coordinate)]
            out.append(pow(unit, -1, self.p))
        return tuple(out)

    # -- serialization --------------------------------------------------------

    def to_json(self) -> dict:
        out = {
            "p": self.p,
            "descriptor": self.descriptor,
            "coordinates": list(self.coordinates),
            "unit_coordinate": self.unit_coordinate,
            "laws": {
                name: self.ring.payload_to_json(law)
                for name, law in zip(self.coordinates, self.laws)
            },
        }
        if self.relation is not None:
            out["relation"] = self.ring.payload_to_json(self.relation)
        return out

    def render_text(self) -> str:
        lines = [f"# composition law, {self.descriptor}"]
        for name, law in zip(self.coordinates, self.laws):
            lines.append(f"{name}'' = {self.ring.show(law)}")
        if self.relation is not None:
            lines.append(f"relation: {self.ring.show(self.relation)} = 0")
        return "\n".join(lines)


def _build_law(
    p: int,
    length: int,
    scheme: List[Tuple[int, int]],
    descriptor: dict,
    with_aux: bool,
    closure_degree: int,
) -> GroupLaw:
    """Shared generator: symbolic left/right component vectors, one
    composition through Witt arithmetic, closure assertions, mod-p pass."""
    free_slots: Dict[int, set] = {}
    for j, slot in scheme:
        free_slots.setdefault(j, set()).add(slot)
    top = max(j for j, _ in scheme)
    left_names = [f"a{j}_{slot}" for j, slot in scheme]
    right_names = [n + "'" for n in left_names]
    gens = tuple(left_names + right_names + (["y", "y'"] if with_aux else []))
    S = SymbolicRing(gens, q=p)

    def side_vectors(primed: bool) -> List[WittVec]:
        vecs = []
        for j in range(top + 1):
            comps = []
            for slot in range(length):
                if slot in free_slots.get(j, set()):
                    name = f"a{j}_{slot}" + ("'" if primed else "")
                    comps.append(S.gen(name))
                else:
                    comps.append(S.zero())
            vecs.append(WittVec(p, S, tuple(comps)))
        return vecs

    fs = side_vectors(False)
    gs = side_vectors(True)
    composed = _witt_poly_compose(fs, gs, p, S, length)

    # closure: everything beyond the degree budget, and every forced slot,
    # must vanish identically on F_p points
    for k in range(len(composed)):
        free = free_slots.get(k, set()) if k <= closure_degree else set()
        for slot in range(length):
            if slot in free:
                continue
            if not _pointwise_zero(S, composed[k].components[slot], p):
                raise NoSolution(
                    f"composite escaped the scheme at T^{k}, slot {slot}"
                )

    raw = []
    simp = []
    for j, slot in scheme:
        poly = (
            composed[j].components[slot]
            if j < len(composed)
            else S.zero()
        )
        raw.append(poly)
        simp.append(simplify_mod_p(S, poly, p))
    coordinates = tuple(left_names)
    relation = None
    if with_aux:
        coordinates = coordinates + ("y",)
        raw.append(S.mul(S.gen("y"), S.gen("y'")))
        simp.append(S.mul(S.gen("y"), S.gen("y'")))
        relation = S.sub(S.mul(S.gen("a1_0"), S.gen("y")), S.one())
    return GroupLaw(
        p=p,
        descriptor=descriptor,
        length=length,
        scheme=tuple(scheme),
        coordinates=coordinates,
        unit_coordinate="a1_0",
        has_aux=with_aux,
        ring=S,
        laws=tuple(simp),
        raw_laws=tuple(raw),
        relation=relation,
    )


def group_law_shape(p: int, d: int) -> GroupLaw:
    """Composition law for the degree-d shape-bounded subgroup at ring
    precision d, on Witt coordinates over F_p."""
    scheme = shape_coordinate_scheme(d)
    return _build_law(
        p,
        d,
        scheme,
        {"kind": "shape", "p": p, "d": d},
        with_aux=False,
        closure_degree=d,
    )


def group_law_capped(p: int, precision: int, degree_cap: int) -> GroupLaw:
    """Composition law for degree-filtered automorphisms at the given ring
    precision, with the unit-slope locus carried by the auxiliary
    coordinate y and the relation a1_0 * y - 1."""
    scheme = capped_coordinate_scheme(degree_cap, precision)
    max_deg = degree_cap * 2 ** (precision - 2)
    return _build_law(
        p,
        precision,
        scheme,
        {
            "kind": "capped",
            "p": p,
            "precision": precision,
            "degree_cap": degree_cap,
        },
        with_aux=True,
        closure_degree=max_deg,
    )


# ---------------------------------------------------------------------------
# axiom verification


@dataclass(frozen=True)
class AxiomReport:
    mode: str
    points_checked: int
    triples_checked: int
    identity_ok: bool
    associativity_ok: bool
    inverses_ok: bool
    counterexample: Optional[tuple]

    @property
    def all_ok(self) -> bool:
        return self.identity_ok and self.associativity_ok and self.inverses_ok

    def to_json(self) -> dict:
        return {
            "mode": self.mode,
            "points_checked": self.points_checked,
            "triples_checked": self.triples_checked,
            "identity": self.identity_ok,
            "associativity": self.associativity_ok,
            "inverses": self.inverses_ok,
            "counterexample": (
                [list(t) for t in self.counterexample]
                if self.counterexample
                else None
            ),
        }


def enumerate_points(law: GroupLaw) -> List[Tuple[int, ...]]:
    p = law.p
    free = len(law.coordinates) - (1 if law.has_aux else 0)
    unit_pos = law.coordinates.index(law.unit_coordinate)
    points = []
    for code in range(p ** free):
        digits = []
        c = code
        for _ in range(free):
            digits.append(c % p)
            c //= p
        if digits[unit_pos] % p == 0:
            continue
        if law.has_aux:
            digits.append(pow(digits[unit_pos], -1, p))
        points.append(tuple(digits))
    return points


def sample_point(law: GroupLaw, rng) -> Tuple[int, ...]:
    p = law.p
    unit_pos = law.coordinates.index(law.unit_coordinate)
    free = len(law.coordinates) - (1 if law.has_aux else 0)
    digits = [rng.randrange(p) for _ in range(free)]
    digits[unit_pos] = rng.randrange(1, p)
    if law.has_aux:
        digits.append(pow(digits[unit_pos], -1, p))
    return tuple(digits)


def verify_group_axioms(
    law: GroupLaw,
    mode: str = "exhaustive",
    rng=None,
    samples: int = 10000,
) -> AxiomReport:
    e = law.identity_point()
    if mode == "exhaustive":
        points = enumerate_points(law)
        triples = None
    elif mode == "sampled":
        if rng is None:
            raise PreconditionFailed("sampled verification needs an rng")
        points = [sample_point(law, rng) for _ in range(min(samples, 400))]
        triples = [
            (sample_point(law, rng), sample_point(law, rng), sample_point(law, rng))
            for _ in range(samples)
        ]
    else:
        raise PreconditionFailed(f"unknown mode {mode!r}")

    identity_ok = True
    associativity_ok = True
    inverses_ok = True
    witness = None

    for t in points:
        if law.compose_points(e, t) != t or law.compose_points(t, e) != t:
            identity_ok = False
            witness = witness or (t,)
            break

    triples_checked = 0
    if mode == "exhaustive":
        for a in points:
            for b in points:
                ab = law.compose_points(a, b)
                for c in points:
                    if law.compose_points(ab, c) != law.compose_points(
                        a, law.compose_points(b, c)
                    ):
                        associativity_ok = False
                        witness = witness or (a, b, c)
                        break
                    triples_checked += 1
                if not associativity_ok:
                    break
            if not associativity_ok:
                break
        point_set = set(points)
        for t in points:
            if not any(
                law.compose_points(t, u) == e and law.compose_points(u, t) == e
                for u in point_set
            ):
                inverses_ok = False
                witness = witness or (t,)
                break
    else:
        for a, b, c in triples:
            if law.compose_points(law.compose_points(a, b), c) != law.compose_points(
                a, law.compose_points(b, c)
            ):
                associativity_ok = False
                witness = witness or (a, b, c)
                break
            triples_checked += 1
        # inverses through the polynomial-map dictionary
        from .inversion import invert

        for t in points[:50]:
            u = law.aut_to_point(invert(law.point_to_aut(t)))
            if law.compose_points(t, u) != e or law.compose_points(u, t) != e:
                inverses_ok = False
                witness = witness or (t,)
                break

    return AxiomReport(
        mode=mode,
        points_checked=len(points),
        triples_checked=triples_checked,
        identity_ok=identity_ok,
        associativity_ok=associativity_ok,
        inverses_ok=inverses_ok,
        counterexample=witness,
    )
