"""Arrow expansion: inflate the sample side of a reduced admissible fan by an
independent uniform space.

Every space on the u-side (the ancestors of u) is tensored with a uniform
m-point space W; morphisms within that side become map x identity, and
morphisms leaving it first drop the W coordinate.  The arrow entropy of the
fan grows by exactly ln m while all conditioned x-side data is unchanged,
and marginalizing W out recovers the original diagram exactly, so expansion
is a right inverse of contraction."""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .diagrams import Diagram, FanIndices, Reduction, classify_fan, condition_diagram, sub_diagram
from .errors import BadParamError, NotReducedError, VerificationError
from .spaces import ProbSpace, pushforward, tensor_spaces

ENTROPY_TOL = 1e-9
SHIFT_TOL = 1e-12


@dataclass(frozen=True)
class ExpansionSpec:
    """A reduced admissible fan in a base diagram plus the W size m >= 1.

    The added arrow entropy is ln m; only integer sizes are realizable with
    finite spaces, so arbitrary lambda targets are approximated by the
    caller picking m, not by this module."""

    base: Diagram
    fan: FanIndices
    m: int

    def __post_init__(self):
        if not isinstance(self.m, int) or self.m < 1:
            raise BadParamError(f"W size must be a positive int, got {self.m!r}")
        cls = classify_fan(self.base, self.fan)
        if not cls.reduced:
            raise NotReducedError(f"fan {self.fan} is not a reduced admissible fan")

    @property
    def added_entropy(self) -> float:
        return math.log(self.m)

    def w_space(self) -> ProbSpace:
        return ProbSpace([f"w{k}" for k in range(self.m)], [Fraction(1, self.m)] * self.m)


def _u_side(spec: ExpansionSpec) -> set:
    return set(spec.base.category.ancestors(spec.fan.u_obj))


def expand_diagram(spec: ExpansionSpec) -> Diagram:
    """The inflated diagram; m = 1 returns the base unchanged."""
    if spec.m == 1:
        return spec.base
    base = spec.base
    inflate = _u_side(spec)
    w = spec.w_space()
    spaces = {}
    for obj in base.category.objects:
        spaces[obj] = tensor_spaces(base.spaces[obj], w) if obj in inflate else base.spaces[obj]
    maps = {}
    for (i, j) in base.category.covers:
        old = base.prime_maps[(i, j)].mapping
        if i in inflate and j in inflate:
            mapping = {(v, wk): (old[v], wk) for (v, wk) in spaces[i].atoms}
        elif i in inflate:
            mapping = {(v, wk): old[v] for (v, wk) in spaces[i].atoms}
        else:
            # a morphism cannot enter the u-side from outside it: its source
            # would then be an ancestor of u as well
            mapping = dict(old)
        maps[(i, j)] = Reduction(spaces[i], spaces[j], mapping)
    return Diagram(base.category, spaces, maps, validate=True)


def strip_expansion(expanded: Diagram, spec: ExpansionSpec) -> Diagram:
    """Marginalize the W coordinate back out of the u-side."""
    if spec.m == 1:
        return expanded
    inflate = _u_side(spec)
    spaces = {}
    for obj in expanded.category.objects:
        if obj in inflate:
            spaces[obj] = pushforward(expanded.spaces[obj],
                                      {(v, wk): v for (v, wk) in expanded.spaces[obj].atoms})
        else:
            spaces[obj] = expanded.spaces[obj]
    maps = {}
    for (i, j) in expanded.category.covers:
        old = expanded.prime_maps[(i, j)].mapping
        if i in inflate:
            mapping = {}
            for (v, wk), image in old.items():
                stripped = image[0] if j in inflate else image
                if mapping.setdefault(v, stripped) != stripped:
                    raise VerificationError(f"W marginal ill-defined on cover {(i, j)!r}")
        else:
            mapping = dict(old)
        maps[(i, j)] = Reduction(spaces[i], spaces[j], mapping)
    return Diagram(expanded.category, spaces, maps, validate=True)


@dataclass(frozen=True)
class ExpansionReport:
    arrow_entropy_before: float
    arrow_entropy_after: float
    added: float
    shifted_objects: tuple[str, ...]
    conditioned_slices_equal: bool
    admissible_after: bool
    reduced_after: bool
    recovered_exactly: bool


def verify_expansion(original: Diagram, expanded: Diagram,
                     spec: ExpansionSpec) -> ExpansionReport:
    """Check the expansion bookkeeping clause by clause.

    Raises VerificationError naming the first violated clause; returns the
    measured report when everything passes."""
    fan = spec.fan
    inflate = _u_side(spec)
    added = spec.added_entropy

    h_x = original.spaces[fan.x_obj].entropy
    before = original.spaces[fan.z_obj].entropy - h_x
    after = expanded.spaces[fan.z_obj].entropy - expanded.spaces[fan.x_obj].entropy
    if abs(after - (before + added)) > ENTROPY_TOL:
        raise VerificationError(
            f"arrow entropy: expected {before + added}, got {after}")

    for obj in original.category.objects:
        h_old = original.spaces[obj].entropy
        h_new = expanded.spaces[obj].entropy
        if obj in inflate:
            if abs(h_new - (h_old + added)) > SHIFT_TOL:
                raise VerificationError(f"entropy shift at {obj!r}: {h_new - h_old}")
        elif expanded.spaces[obj] != original.spaces[obj]:
            raise VerificationError(f"space at {obj!r} changed outside the u-side")

    x_ideal = original.category.descendants(fan.x_obj)
    slices_equal = True
    for atom in expanded.spaces[fan.u_obj].atoms:
        cond_new = sub_diagram(condition_diagram(expanded, fan.u_obj, atom), x_ideal)
        base_atom = atom[0] if spec.m > 1 else atom
        cond_old = sub_diagram(condition_diagram(original, fan.u_obj, base_atom), x_ideal)
        if cond_new != cond_old:
            slices_equal = False
            raise VerificationError(f"conditioned x-side changed at u-atom {atom!r}")

    cls = classify_fan(expanded, fan)
    if not cls.admissible:
        raise VerificationError("expanded fan is not admissible")
    if spec.m >= 2 and cls.reduced:
        raise VerificationError("expanded fan is still reduced")

    recovered = strip_expansion(expanded, spec)
    if recovered != original:
        raise VerificationError("marginalizing W does not recover the original")

    return ExpansionReport(
        arrow_entropy_before=before,
        arrow_entropy_after=after,
        added=added,
        shifted_objects=tuple(sorted(inflate)),
        conditioned_slices_equal=slices_equal,
        admissible_after=cls.admissible,
        reduced_after=cls.reduced,
        recovered_exactly=True,
    )
