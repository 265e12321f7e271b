"""Finite probability spaces with exact rational weights.

All measure bookkeeping (pushforward, conditioning, mixtures) is done with
`fractions.Fraction`, so mass conservation is exact and assertable with zero
tolerance.  Floating point enters only at the entropy/log boundary.  Entropy
is measured in nats.
"""
from __future__ import annotations

import math
from fractions import Fraction
from typing import Iterable, Mapping

from .errors import (
    BadParamError,
    DuplicateAtomError,
    NegativeWeightError,
    NotSurjectiveError,
    UnknownAtomError,
    UnknownKindError,
    WeightSumError,
)

ONE = Fraction(1)

# Atom labels of the two-point space returned by special_space("lambda", a).
# The light atom carries weight 1 - a, the heavy atom weight a.
LAMBDA_LIGHT = "light"
LAMBDA_HEAVY = "heavy"
DIRAC_ATOM = "*"


def as_fraction(value) -> Fraction:
    """Coerce ints, strings like "3/4" and Fractions to Fraction."""
    if isinstance(value, Fraction):
        return value
    if isinstance(value, (int, str)):
        return Fraction(value)
    raise BadParamError(f"cannot interpret {value!r} as an exact rational")


class ProbSpace:
    """A finite probability space: atoms with positive rational weights.

    Atoms of zero weight are dropped at construction, so every atom in the
    support has strictly positive weight and the weights sum exactly to 1.
    Atom labels are opaque hashable values; construction order is preserved
    and used wherever deterministic iteration matters.
    """

    __slots__ = ("atoms", "weights", "_index", "_entropy")

    def __init__(self, atoms: Iterable, weights: Iterable):
        atoms = list(atoms)
        weights = [as_fraction(w) for w in weights]
        if len(atoms) != len(weights):
            raise BadParamError("atoms and weights must have equal length")
        index: dict = {}
        kept_atoms = []
        kept_weights = []
        for atom, weight in zip(atoms, weights):
            if weight < 0:
                raise NegativeWeightError(f"atom {atom!r} has weight {weight}")
            if atom in index:
                raise DuplicateAtomError(f"atom {atom!r} declared twice")
            index[atom] = weight
            if weight > 0:
                kept_atoms.append(atom)
                kept_weights.append(weight)
        total = sum(kept_weights, Fraction(0))
        if total != 1:
            raise WeightSumError(f"weights sum to {total}, not 1")
        self.atoms = tuple(kept_atoms)
        self.weights = tuple(kept_weights)
        self._index = {a: w for a, w in zip(kept_atoms, kept_weights)}
        self._entropy = None

    # -- basic queries ------------------------------------------------------

    def weight(self, atom) -> Fraction:
        try:
            return self._index[atom]
        except KeyError:
            raise UnknownAtomError(f"atom {atom!r} not in support") from None

    def get(self, atom, default=Fraction(0)) -> Fraction:
        return self._index.get(atom, default)

    def items(self):
        return zip(self.atoms, self.weights)

    def __contains__(self, atom) -> bool:
        return atom in self._index

    def __len__(self) -> int:
        return len(self.atoms)

    def __iter__(self):
        return iter(self.atoms)

    def __eq__(self, other) -> bool:
        if not isinstance(other, ProbSpace):
            return NotImplemented
        return self._index == other._index

    def __hash__(self) -> int:
        return hash(frozenset(self._index.items()))

    def __repr__(self) -> str:
        inside = ", ".join(f"{a!r}: {w}" for a, w in self.items())
        if len(inside) > 120:
            return f"ProbSpace(<{len(self)} atoms>)"
        return f"ProbSpace({{{inside}}})"

    def is_dirac(self) -> bool:
        return len(self.atoms) == 1

    def is_uniform(self) -> bool:
        return len(set(self.weights)) <= 1

    @property
    def entropy(self) -> float:
        """Shannon entropy in nats, computed from the exact weights."""
        if self._entropy is None:
            total = 0.0
            for w in self.weights:
                if w != 1:
                    # log via numerator/denominator keeps precision for
                    # rationals whose float conversion would be extreme
                    total -= float(w) * (math.log(w.numerator) - math.log(w.denominator))
            self._entropy = total
        return self._entropy


def make_space(atoms: Iterable, weights: Iterable) -> ProbSpace:
    """Build a ProbSpace from parallel atom and weight lists."""
    return ProbSpace(atoms, weights)


def special_space(kind: str, param=None) -> ProbSpace:
    """Named standard spaces: uniform(n), lambda(alpha), dirac.

    lambda(alpha) is the two-point space weighted (1-alpha, alpha); for
    alpha in {0, 1} it degenerates to a one-atom space.
    """
    if kind == "uniform":
        n = param
        if not isinstance(n, int) or n < 1:
            raise BadParamError(f"uniform size must be a positive int, got {param!r}")
        return ProbSpace([f"u{i}" for i in range(n)], [Fraction(1, n)] * n)
    if kind == "lambda":
        alpha = as_fraction(param)
        if alpha < 0 or alpha > 1:
            raise BadParamError(f"lambda parameter must lie in [0, 1], got {alpha}")
        return ProbSpace([LAMBDA_LIGHT, LAMBDA_HEAVY], [1 - alpha, alpha])
    if kind == "dirac":
        atom = DIRAC_ATOM if param is None else param
        return ProbSpace([atom], [ONE])
    raise UnknownKindError(f"unknown space kind {kind!r}")


def uniform(n: int) -> ProbSpace:
    return special_space("uniform", n)


def lambda_space(alpha) -> ProbSpace:
    return special_space("lambda", alpha)


def dirac(atom=None) -> ProbSpace:
    return special_space("dirac", atom)


def entropy(space: ProbSpace) -> float:
    return space.entropy


def tensor_spaces(x: ProbSpace, y: ProbSpace) -> ProbSpace:
    """Independent product; atoms are (a, b) pairs, entropy is additive."""
    atoms = []
    weights = []
    for a, wa in x.items():
        for b, wb in y.items():
            atoms.append((a, b))
            weights.append(wa * wb)
    return ProbSpace(atoms, weights)


def pushforward(space: ProbSpace, mapping: Mapping) -> ProbSpace:
    """Image measure under a total map on the support.

    Target atoms appear in order of first appearance while scanning the
    domain, which keeps downstream iteration deterministic.
    """
    acc: dict = {}
    order = []
    for atom, weight in space.items():
        try:
            image = mapping[atom]
        except KeyError:
            raise UnknownAtomError(f"map undefined on atom {atom!r}") from None
        if image in acc:
            acc[image] += weight
        else:
            acc[image] = weight
            order.append(image)
    return ProbSpace(order, [acc[a] for a in order])


class Reduction:
    """A measure-preserving surjection between finite probability spaces.

    The map is stored as an atom-to-atom assignment on the domain support;
    the pushforward of the domain weights must equal the target weights
    exactly.
    """

    __slots__ = ("domain", "target", "mapping")

    def __init__(self, domain: ProbSpace, target: ProbSpace, mapping: Mapping):
        image = pushforward(domain, mapping)
        if image != target:
            raise NotSurjectiveError(
                "pushforward of the domain does not equal the declared target"
            )
        self.domain = domain
        self.target = target
        self.mapping = {a: mapping[a] for a in domain.atoms}

    @classmethod
    def from_map(cls, domain: ProbSpace, mapping: Mapping, target_atoms=None) -> "Reduction":
        """Build the reduction whose target is the pushforward measure.

        When target_atoms is given, every listed atom must receive positive
        mass (otherwise the declared target class would be empty).
        """
        target = pushforward(domain, mapping)
        if target_atoms is not None:
            missing = [a for a in target_atoms if a not in target]
            if missing:
                raise NotSurjectiveError(f"target atoms {missing!r} receive no mass")
        return cls(domain, target, mapping)

    @classmethod
    def identity(cls, space: ProbSpace) -> "Reduction":
        return cls(space, space, {a: a for a in space.atoms})

    def apply(self, atom):
        try:
            return self.mapping[atom]
        except KeyError:
            raise UnknownAtomError(f"atom {atom!r} not in domain support") from None

    def then(self, other: "Reduction") -> "Reduction":
        """Composition self followed by other."""
        if other.domain != self.target:
            raise BadParamError("reductions do not compose: target/domain mismatch")
        return Reduction(
            self.domain, other.target, {a: other.mapping[b] for a, b in self.mapping.items()}
        )

    def preimage(self, atom) -> tuple:
        if atom not in self.target:
            raise UnknownAtomError(f"atom {atom!r} not in target support")
        return tuple(a for a in self.domain.atoms if self.mapping[a] == atom)

    def fiber(self, atom) -> ProbSpace:
        """The conditioned space over a target atom, renormalized exactly."""
        mass = self.target.weight(atom)
        fiber_atoms = self.preimage(atom)
        return ProbSpace(fiber_atoms, [self.domain.weight(a) / mass for a in fiber_atoms])

    def is_isomorphism(self) -> bool:
        return len(self.domain) == len(self.target)

    def inverse(self) -> "Reduction":
        if not self.is_isomorphism():
            raise BadParamError("reduction is not invertible")
        return Reduction(self.target, self.domain, {b: a for a, b in self.mapping.items()})

    def __eq__(self, other) -> bool:
        if not isinstance(other, Reduction):
            return NotImplemented
        return (
            self.domain == other.domain
            and self.target == other.target
            and self.mapping == other.mapping
        )

    def __hash__(self):
        return hash((self.domain, self.target, frozenset(self.mapping.items())))

    def __repr__(self) -> str:
        return f"Reduction(|{len(self.domain)}| -> |{len(self.target)}|)"


def make_reduction(domain: ProbSpace, mapping: Mapping, target_atoms=None) -> Reduction:
    return Reduction.from_map(domain, mapping, target_atoms)


def condition_fiber(reduction: Reduction, atom) -> ProbSpace:
    return reduction.fiber(atom)


def _weight_table(dist) -> Mapping:
    if isinstance(dist, ProbSpace):
        return dist._index
    return {a: as_fraction(w) for a, w in dist.items()}


def tv_distance(pi, pi_prime) -> Fraction:
    """Total variation distance, the full l1 sum over the union of supports.

    Returned exactly as a Fraction; halve it to get the overlap coefficient
    alpha used by the local estimate.
    """
    p = _weight_table(pi)
    q = _weight_table(pi_prime)
    atoms = list(p)
    atoms += [a for a in q if a not in p]
    zero = Fraction(0)
    return sum((abs(p.get(a, zero) - q.get(a, zero)) for a in atoms), zero)
