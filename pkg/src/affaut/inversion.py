"""Compositional inverses of truncated-line automorphisms.

Two independent routes are provided.  ``invert`` halves the q-adic
precision recursively: an inverse modulo q^ceil(n/2) lifts to a candidate
whose defect is congruent to the identity to at least half precision, and
such near-identity maps invert by negation.  ``oracle_invert`` instead
climbs one q-power at a time from the affine inverse, correcting with the
linearization of the defect.  The two share no logic beyond composition
itself and are cross-checked in the tests.
"""

from __future__ import annotations

from typing import Tuple

from .autgroup import (
    TruncPoly,
    _transport_payload,
    identity_map,
    lift_precision,
    reduce_precision,
)
from .errors import (
    KernelMismatch,
    NoSolution,
    NotAnAutomorphism,
    PreconditionFailed,
)
from .rings import Ring


def _affine_inverse(f: TruncPoly) -> TruncPoly:
    ring = f.ring
    a0 = f.raw_coeffs()[0] if len(f.raw_coeffs()) > 0 else ring.zero()
    a1 = f.raw_coeffs()[1]
    a1i = ring.inv(a1)
    return TruncPoly._raw(ring, [ring.neg(ring.mul(a1i, a0)), a1i])


def _negate_about_identity(f: TruncPoly) -> TruncPoly:
    # inverse of T + q^r h is T - q^r h once 2r >= n
    ring = f.ring
    two_t = TruncPoly(ring, [ring.zero(), ring.from_int(2)])
    return two_t - f


def invert_with_depth(f: TruncPoly) -> Tuple[TruncPoly, int]:
    """Inverse together with the number of nested half-precision descents
    taken (0 when a closed form applied immediately)."""
    if not f.is_automorphism():
        raise NotAnAutomorphism(repr(f))
    ring = f.ring
    if f.degree() <= 1:
        return _affine_inverse(f), 0
    n = ring.truncation
    if n is None:
        raise PreconditionFailed(
            "non-affine inversion needs a q-adically truncated ring"
        )
    if 2 * f.identity_congruence() >= n:
        return _negate_about_identity(f), 0
    r = (n + 1) // 2
    sub, depth = invert_with_depth(reduce_precision(f, r))
    phi = lift_precision(sub, n)
    kappa = f.compose(phi)
    if 2 * kappa.identity_congruence() < n:
        raise KernelMismatch(
            "half-precision inverse did not reduce the defect; "
            f"congruence level {kappa.identity_congruence()} at precision {n}"
        )
    return phi.compose(_negate_about_identity(kappa)), depth + 1


def invert(f: TruncPoly) -> TruncPoly:
    """g with f(g(T)) = T = g(f(T))."""
    return invert_with_depth(f)[0]


def lift_aut(f: TruncPoly, n: int) -> TruncPoly:
    """Canonical-representative lift of an automorphism to precision n; a
    section of reduction, not a homomorphism."""
    if not f.is_automorphism():
        raise NotAnAutomorphism(repr(f))
    return lift_precision(f, n)


def _mod_q_payload(ring: Ring, a):
    """The canonical representative of a mod q, as a payload of ring."""
    r1 = ring.at_precision(1)
    return _transport_payload(_transport_payload(a, ring, r1), r1, ring)


def oracle_invert(f: TruncPoly) -> TruncPoly:
    """Inverse by plain q-adic lifting, for cross-checking invert.

    Start from the affine inverse (exact mod q since higher coefficients
    are nilpotent) and repair one q-power per round: the defect
    T - f(g) has valuation >= k, and dividing it by q^k and by the
    linear coefficient gives the next digit of g.  The digit is reduced
    mod q before being re-scaled, which keeps the candidate's degree at
    the group's own bound throughout."""
    if not f.is_automorphism():
        raise NotAnAutomorphism(repr(f))
    ring = f.ring
    if f.degree() <= 1:
        return _affine_inverse(f)
    n = ring.truncation
    if n is None:
        raise PreconditionFailed(
            "non-affine inversion needs a q-adically truncated ring"
        )
    ident = identity_map(ring)
    a1i = ring.inv(f.raw_coeffs()[1])
    g = _affine_inverse(f)
    for k in range(1, n):
        err = ident - f.compose(g)
        if err.is_zero():
            break
        digit = []
        for c in err.raw_coeffs():
            if ring.q_val(c) < k:
                raise NoSolution(
                    f"defect has valuation {ring.q_val(c)} < {k}; "
                    "the claimed automorphism cannot be inverted"
                )
            s = ring.mul(ring.exact_div_q(c, k), a1i)
            digit.append(ring.mul(ring.q_power(k), _mod_q_payload(ring, s)))
        g = g + TruncPoly._raw(ring, digit)
    if f.compose(g) != ident:
        raise NoSolution("lifting stalled before full precision")
    return g
