"""Randomized arrow contraction on homogeneous diagrams.

Given an admissible fan (x <- z -> u) in a homogeneous diagram, the x-side
ideal is extended to a two-fan against the joint spaces with u.  Sampling N
atoms of u and conditioning on the sample yields a new fan whose sample
space V is uniform on the N indices; the fiber counts over the x-side
determine everything observable about the conditioned fan, so the
astronomically large sample-power spaces are never materialized, only their
conditioned slices.
"""
from __future__ import annotations

import math
import random
import warnings
from collections import Counter
from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .automorphisms import analyze, diagram_isomorphic, verify_explicit_iso
from .categories import DESCENDANTS, IndexingCategory, cone_members
from .diagrams import (
    Diagram,
    FanIndices,
    FanOfDiagrams,
    Reduction,
    classify_fan,
    constant_diagram,
    joint_space,
    sub_diagram,
    _from_initial_measure,
)
from .distances import local_estimate_bound
from .errors import (
    NotAdmissibleError,
    NotFanGeneratedError,
    NotHomogeneousError,
    OutOfRangeError,
    TooLargeError,
    UnknownKindError,
)
from .sampling import CategoricalSampler, np_rng_for
from .spaces import ProbSpace

DEFAULT_MATERIALIZE_CAP = 500_000


@dataclass(frozen=True)
class ExtendedFan:
    """The x-side ideal coupled objectwise with u: a two-fan of diagrams over
    the ideal's shape, with natural projections onto the x-side and onto u.

    Conditioned-fiber diagrams and their isomorphism verdicts are cached per
    u atom; they depend only on the fan, not on any sampled run.  Cache
    writes are idempotent, so sharing one instance across threads is safe."""

    shape: IndexingCategory
    xdiag: Diagram
    ydiag: Diagram
    u_space: ProbSpace
    proj_x: dict
    proj_u: dict
    base: Diagram
    fan: FanIndices
    fibers: dict  # u atom -> tuple of x0 atoms in the fiber over u
    _fiber_iso_cache: dict = field(default_factory=dict, repr=False, compare=False)

    @property
    def x0(self) -> str:
        return self.shape.initial

    @property
    def x0_space(self) -> ProbSpace:
        return self.xdiag.spaces[self.x0]

    @property
    def x0_card(self) -> int:
        return len(self.x0_space)

    @property
    def fiber_size(self) -> int:
        return len(next(iter(self.fibers.values())))

    @property
    def rho(self) -> Fraction:
        """Fiber density |x0 fiber| / |x0|; equals exp(-mutual information)."""
        return Fraction(self.fiber_size, self.x0_card)

    @property
    def size_h(self) -> int:
        return self.shape.size

    @property
    def size_g(self) -> int:
        return self.base.category.size

    def conditioned_x_side(self, u_atom) -> Diagram:
        """The x-side ideal conditioned on a u atom (uniform on its fiber)."""
        cached = self._fiber_iso_cache.get(("diagram", u_atom))
        if cached is None:
            fiber = self.fibers[u_atom]
            measure = ProbSpace(fiber, [Fraction(1, len(fiber))] * len(fiber))
            cached = _from_initial_measure(self.xdiag, measure)
            self._fiber_iso_cache[("diagram", u_atom)] = cached
        return cached

    def fiber_isomorphic_to_reference(self, u_atom) -> bool:
        """Whether the conditioned x-side at u is isomorphic to the one at
        the reference atom (the first u atom); verified explicitly through
        the coordinate translation when available, else by search."""
        cached = self._fiber_iso_cache.get(("verdict", u_atom))
        if cached is not None:
            return cached
        u_ref = self.u_space.atoms[0]
        if len(self.fibers[u_atom]) != len(self.fibers[u_ref]):
            verdict = False
        else:
            cond_u = self.conditioned_x_side(u_atom)
            cond_ref = self.conditioned_x_side(u_ref)
            verdict = _fiber_translation_iso(self, cond_u, cond_ref, u_atom, u_ref)
            if not verdict:
                verdict, _ = diagram_isomorphic(cond_u, cond_ref)
        self._fiber_iso_cache[("verdict", u_atom)] = verdict
        return verdict


def extend_admissible_fan(diagram: Diagram, fi: FanIndices) -> ExtendedFan:
    """Build the extended two-fan over the ideal of the fan's x object.

    Requires the designated fan to be admissible and the diagram to be
    homogeneous (a constructor certificate is accepted).  Every per-object
    fan (x_i <- joint -> u) is minimal by construction.
    """
    cls = classify_fan(diagram, fi)
    if not cls.admissible:
        raise NotAdmissibleError(
            f"fan {fi} is not admissible (minimal={cls.minimal}, outside={cls.witness})")
    if not diagram.certified_homogeneous:
        report = analyze(diagram, count_automorphisms=False)
        if not report.homogeneous:
            raise NotHomogeneousError("contraction requires a homogeneous diagram")

    xdiag = sub_diagram(diagram, cone_members(diagram.category, fi.x_obj, DESCENDANTS))
    shape = xdiag.category
    u_space = diagram.spaces[fi.u_obj]

    spaces = {}
    proj_x = {}
    proj_u = {}
    for obj in shape.objects:
        joint, to_x, to_u = joint_space(diagram, obj, fi.u_obj)
        spaces[obj] = joint
        proj_x[obj] = to_x
        proj_u[obj] = to_u
    maps = {}
    for (i, j) in shape.covers:
        chi = xdiag.prime_maps[(i, j)].mapping
        mapping = {(x, u): (chi[x], u) for (x, u) in spaces[i].atoms}
        maps[(i, j)] = Reduction(spaces[i], spaces[j], mapping)
    ydiag = Diagram(shape, spaces, maps, validate=False)

    fibers: dict = {u: [] for u in u_space.atoms}
    for (x, u) in spaces[shape.initial].atoms:
        fibers[u].append(x)
    fibers = {u: tuple(xs) for u, xs in fibers.items()}
    sizes = {len(xs) for xs in fibers.values()}
    if len(sizes) != 1:
        raise NotHomogeneousError("fibers over u have unequal sizes")
    return ExtendedFan(shape, xdiag, ydiag, u_space, proj_x, proj_u,
                       diagram, fi, fibers)


@dataclass(frozen=True)
class ContractionParams:
    N: int
    t: float
    rho: Fraction
    seed: int


def default_parameters(ext: ExtendedFan, seed: int) -> ContractionParams:
    """N = ceil(ln^3|x0| / rho) and t = 10 / ln|x0|.

    Warns (without failing) when t > 1, i.e. |x0| < e^10, since the
    concentration regime needs t at most 1.
    """
    card = ext.x0_card
    if card < 2:
        raise OutOfRangeError("the x-side initial space must have at least 2 atoms")
    log_card = math.log(card)
    rho = ext.rho
    n = math.ceil(log_card ** 3 * rho.denominator / rho.numerator)
    t = 10.0 / log_card
    if t > 1.0:
        warnings.warn(
            f"t = 10/ln|x0| = {t:.3f} > 1: outside the concentration regime",
            RuntimeWarning, stacklevel=2)
    return ContractionParams(N=n, t=t, rho=rho, seed=seed)


@dataclass
class ContractionRun:
    """One sampled contraction: the conditioned fan and its statistics.

    Exact identities: nu sums to rho * |x0| and the conditioned weights sum
    to 1, both as rationals with zero tolerance.  fan_prime is materialized
    only when the conditioned sample space is below the cap; all statistics
    are derived from the integer fiber counts either way.
    """

    params: ContractionParams
    u_bar: tuple
    counts: dict          # x0 atom -> sample count, positive entries only
    nu: dict              # x0 atom -> exact multiplicity count / N
    p_b0: dict            # x0 atom -> exact conditioned weight
    alpha: Fraction       # half total variation against the uniform law
    height: float         # mean log fiber count of the conditioned fan
    coverage: bool
    fiber_iso_ok: bool
    ikd_upper: float
    rough_bound_used: bool
    xprime: Diagram
    vspace: ProbSpace
    fan_prime: FanOfDiagrams | None
    x0_card: int
    fiber_size: int
    size_h: int
    size_g: int

    @property
    def sum_nu(self) -> Fraction:
        return sum(self.nu.values(), Fraction(0))

    @property
    def total_mass(self) -> Fraction:
        return sum(self.p_b0.values(), Fraction(0))

    def height_two_ways(self) -> tuple[float, float]:
        """Mean log fiber count vs the entropy difference of the fan arrow."""
        via_fibers = self.height
        via_difference = (math.log(self.params.N * self.fiber_size)
                          - self.xprime.initial_space.entropy)
        return via_fibers, via_difference

    def height_thresholds(self) -> tuple[float, float]:
        """ln(N rho) + t, and 4 ln ln |x0|."""
        n_rho = self.params.N * float(self.params.rho)
        return (math.log(n_rho) + self.params.t,
                4.0 * math.log(math.log(self.x0_card)))

    def ikd_caps(self) -> tuple[float, float]:
        """20 times the witness shape size, and 20 times the ambient size."""
        return 20.0 * self.size_h, 20.0 * self.size_g


def _fiber_translation_iso(ext: ExtendedFan, cond_u: Diagram, cond_ref: Diagram,
                           u_atom, u_ref) -> bool:
    """Explicit XOR-translation isomorphism between conditioned fibers of a
    coordinate diagram; None-coordinate diagrams fall back to search."""
    meta = ext.base.coord_meta
    if meta is None:
        return False
    table = meta.embed(ext.fan.u_obj, u_atom ^ u_ref)
    maps = {}
    for obj in ext.shape.objects:
        shift = meta.extract(obj, table)
        maps[obj] = {a: a ^ shift for a in cond_u.spaces[obj].atoms}
    return verify_explicit_iso(cond_u, cond_ref, maps)


def contract_once(ext: ExtendedFan, params: ContractionParams, *,
                  materialize_cap: int = DEFAULT_MATERIALIZE_CAP) -> ContractionRun:
    """Sample u N times and condition the extended fan on the sample.

    The sample-power spaces are virtual: fiber counts are accumulated per
    distinct sampled atom, which gives the exact conditioned law.  The
    conditioned x-side is rebuilt from that law; the fiber isomorphism with
    the unconditioned slices is verified for every distinct sampled atom.
    """
    rng = random.Random(params.seed)
    sampler = CategoricalSampler(ext.u_space)
    u_bar = tuple(sampler.draw_many(rng, params.N))
    multiplicity = Counter(u_bar)

    counts: dict = {}
    for u, mult in multiplicity.items():
        for x in ext.fibers[u]:
            counts[x] = counts.get(x, 0) + mult
    n, f, card = params.N, ext.fiber_size, ext.x0_card
    total = sum(counts.values())
    assert total == n * f, "fiber counting identity failed"

    x0_atoms = ext.x0_space.atoms
    nu = {x: Fraction(c, n) for x, c in counts.items()}
    p_b0 = {x: Fraction(c, n * f) for x, c in counts.items()}
    coverage = len(counts) == card

    # alpha over the full x0 set, zero-count atoms included
    deviation = sum(abs(counts.get(x, 0) * card - n * f) for x in x0_atoms)
    alpha = Fraction(deviation, 2 * n * f * card)

    log_cache: dict[int, float] = {}
    height = 0.0
    for c in counts.values():
        log_c = log_cache.get(c)
        if log_c is None:
            log_c = math.log(c)
            log_cache[c] = log_c
        height += (c / (n * f)) * log_c

    covered = [x for x in x0_atoms if x in counts]
    measure = ProbSpace(covered, [p_b0[x] for x in covered])
    xprime = _from_initial_measure(ext.xdiag, measure)
    vspace = ProbSpace(range(1, n + 1), [Fraction(1, n)] * n)

    # conditioned-fiber isomorphism against the reference atom of u; the
    # verdicts are run-independent and cached on the fan
    fiber_iso_ok = all(ext.fiber_isomorphic_to_reference(u)
                       for u in ext.u_space.atoms if u in multiplicity)

    if coverage:
        ikd_upper = local_estimate_bound(ext.size_h, card, alpha)
        rough = False
    else:
        ikd_upper = 2.0 * ext.size_h * math.log(card)
        rough = True

    fan_prime = None
    if n * f <= materialize_cap:
        fan_prime = _materialize_fan(ext, u_bar, xprime, vspace)

    return ContractionRun(params=params, u_bar=u_bar, counts=counts, nu=nu,
                          p_b0=p_b0, alpha=alpha, height=height,
                          coverage=coverage, fiber_iso_ok=fiber_iso_ok,
                          ikd_upper=ikd_upper, rough_bound_used=rough,
                          xprime=xprime, vspace=vspace, fan_prime=fan_prime,
                          x0_card=card, fiber_size=f,
                          size_h=ext.size_h, size_g=ext.size_g)


def _materialize_fan(ext: ExtendedFan, u_bar: tuple, xprime: Diagram,
                     vspace: ProbSpace) -> FanOfDiagrams:
    """The conditioned two-fan (x' <- y' -> V) with y' built explicitly."""
    shape = ext.shape
    n = len(u_bar)
    y0_atoms = [(x, idx + 1) for idx, u in enumerate(u_bar) for x in ext.fibers[u]]
    weight = Fraction(1, len(y0_atoms))
    spaces = {}
    comp = {o: ext.xdiag.composite_mapping(shape.initial, o) for o in shape.objects}
    for obj in shape.objects:
        acc: dict = {}
        order = []
        for (x, idx) in y0_atoms:
            atom = (comp[obj][x], idx)
            if atom in acc:
                acc[atom] += weight
            else:
                acc[atom] = weight
                order.append(atom)
        spaces[obj] = ProbSpace(order, [acc[a] for a in order])
    maps = {}
    for (i, j) in shape.covers:
        chi = ext.xdiag.prime_maps[(i, j)].mapping
        mapping = {(x, idx): (chi[x], idx) for (x, idx) in spaces[i].atoms}
        maps[(i, j)] = Reduction(spaces[i], spaces[j], mapping)
    top = Diagram(shape, spaces, maps, validate=False)
    vdiag = constant_diagram(shape, vspace)
    proj_x = {o: Reduction(spaces[o], xprime.spaces[o],
                           {(x, idx): x for (x, idx) in spaces[o].atoms})
              for o in shape.objects}
    proj_v = {o: Reduction(spaces[o], vspace,
                           {(x, idx): idx for (x, idx) in spaces[o].atoms})
              for o in shape.objects}
    assert n == len(vspace)
    return FanOfDiagrams(top, xprime, vdiag, proj_x, proj_v, validate=False)


def recover_collapsed_diagram(diagram: Diagram, fi: FanIndices, run: ContractionRun,
                              *, cap: int = DEFAULT_MATERIALIZE_CAP) -> Diagram:
    """Reassemble a diagram of the original combinatorial type from a run.

    x-side objects carry the conditioned spaces; each strict ancestor of u
    carries the joint of its largest x-side descendant with the sample space
    V; u itself carries V.  Requires the input to be fan-generated: every
    such ancestor must embed into that joint (checked at runtime), and u
    must have no descendants of its own.
    """
    cat = diagram.category
    x_side = set(cat.descendants(fi.x_obj))
    u_side = set(cat.ancestors(fi.u_obj))
    if fi.u_obj in x_side:
        raise NotFanGeneratedError("u lies in the ideal of x; nothing to contract")
    if len(cat.descendants(fi.u_obj)) > 1:
        raise NotFanGeneratedError("u with proper descendants is not supported")

    # largest x-side descendant of each sample-side object
    dmax: dict = {}
    for g in u_side:
        if g == fi.u_obj:
            continue
        among = [h for h in cat.descendants(g) if h in x_side]
        top = [m for m in among if all(cat.reaches(m, h) for h in among)]
        if among and not top:
            raise NotFanGeneratedError(f"object {g!r} has no largest x-side descendant")
        dmax[g] = top[0] if among else None

    # fan-generated check: g must embed into the joint of dmax(g) and u
    for g, d in dmax.items():
        if d is None:
            pair = diagram.composite_mapping(g, fi.u_obj)
        else:
            cd = diagram.composite_mapping(g, d)
            cu = diagram.composite_mapping(g, fi.u_obj)
            pair = {a: (cd[a], cu[a]) for a in diagram.spaces[g].atoms}
        if len(set(pair.values())) != len(diagram.spaces[g]):
            raise NotFanGeneratedError(
                f"space at {g!r} is not the joint of its feet")

    n, f = run.params.N, run.fiber_size
    if n * f > cap:
        raise TooLargeError("conditioned joint spaces exceed the materialization cap")
    if run.fan_prime is None:
        raise TooLargeError("run carries no materialized fan; rerun with a larger cap")
    yprime = run.fan_prime.top

    spaces: dict = {}
    for obj in cat.objects:
        if obj in x_side:
            spaces[obj] = run.xprime.spaces[obj]
        elif obj == fi.u_obj:
            spaces[obj] = run.vspace
        else:
            d = dmax[obj]
            spaces[obj] = run.vspace if d is None else yprime.spaces[d]

    def route(p: str, q: str) -> dict:
        if p in x_side:
            return run.xprime.composite_mapping(p, q)
        dp = dmax.get(p)
        if q == fi.u_obj or (q in u_side and dmax.get(q) is None):
            if dp is None:
                return {idx: idx for idx in spaces[p].atoms}
            return {(x, idx): idx for (x, idx) in spaces[p].atoms}
        if q in x_side:
            chi = run.xprime.composite_mapping(dp, q)
            return {(x, idx): chi[x] for (x, idx) in spaces[p].atoms}
        dq = dmax[q]
        chi = run.xprime.composite_mapping(dp, dq)
        return {(x, idx): (chi[x], idx) for (x, idx) in spaces[p].atoms}

    maps = {}
    for (p, q) in cat.covers:
        maps[(p, q)] = Reduction(spaces[p], spaces[q], route(p, q))
    return Diagram(cat, spaces, maps, validate=True)


# -- tail bounds and Monte-Carlo verification --------------------------------


@dataclass(frozen=True)
class TailBound:
    bound: float
    threshold: float | None


def tail_bounds(kind: str, n: int, rho, t: float, *, x0_card: int | None = None,
                size: int | None = None) -> TailBound:
    """Analytic tail bounds for the contraction statistics.

    binomial_i: P{|nu - rho| > rho t} <= 2 exp(-N rho t^2 / 3), t in [0, 1].
    binomial_ii: P{(nu/rho) ln(nu/rho) > t} <= exp(-N rho t^2 / 12), t in [0, 2].
    totalvar: the binomial_i bound times |x0|, event 2 alpha > t.
    ikd: same bound, event bound-value > t * 2 * size * ln|x0|.
    height: |x0| exp(-N rho t^2 / 12), event height > ln(N rho) + t.
    """
    rho = float(Fraction(rho) if not isinstance(rho, float) else rho)
    if not 0 < rho <= 1:
        raise OutOfRangeError(f"rho must lie in (0, 1], got {rho}")
    exponent_third = math.exp(-n * rho * t * t / 3.0)
    exponent_twelfth = math.exp(-n * rho * t * t / 12.0)
    if kind == "binomial_i":
        if not 0 <= t <= 1:
            raise OutOfRangeError(f"binomial_i needs t in [0, 1], got {t}")
        return TailBound(2.0 * exponent_third, None)
    if kind == "binomial_ii":
        if not 0 <= t <= 2:
            raise OutOfRangeError(f"binomial_ii needs t in [0, 2], got {t}")
        return TailBound(exponent_twelfth, None)
    if kind == "totalvar":
        if not 0 <= t <= 1:
            raise OutOfRangeError(f"totalvar needs t in [0, 1], got {t}")
        if x0_card is None:
            raise OutOfRangeError("totalvar bound needs x0_card")
        return TailBound(2.0 * x0_card * exponent_third, t)
    if kind == "ikd":
        if not 0 <= t <= 1:
            raise OutOfRangeError(f"ikd needs t in [0, 1], got {t}")
        if x0_card is None or size is None:
            raise OutOfRangeError("ikd bound needs x0_card and size")
        if t < 10.0 / math.log(x0_card):
            warnings.warn("t below 10/ln|x0|: outside the stated regime",
                          RuntimeWarning, stacklevel=2)
        return TailBound(2.0 * x0_card * exponent_third,
                         t * 2.0 * size * math.log(x0_card))
    if kind == "height":
        if not 0 <= t <= 2:
            raise OutOfRangeError(f"height needs t in [0, 2], got {t}")
        if x0_card is None:
            raise OutOfRangeError("height bound needs x0_card")
        return TailBound(x0_card * exponent_twelfth, math.log(n * rho) + t)
    raise UnknownKindError(f"unknown tail kind {kind!r}")


@dataclass(frozen=True)
class TailCheck:
    kind: str
    N: int
    rho: float
    t: float
    trials: int
    empirical: float
    bound: float
    threshold: float | None
    slack: float
    passed: bool


def _finish_check(kind, n, rho, t, trials, hits, tb: TailBound) -> TailCheck:
    empirical = hits / trials
    slack = 3.0 * math.sqrt(max(empirical * (1.0 - empirical), 0.0) / trials)
    passed = empirical <= min(1.0, tb.bound) + slack
    return TailCheck(kind, n, float(rho), t, trials, empirical,
                     tb.bound, tb.threshold, slack, passed)


def monte_carlo_tails(kind: str, *, t: float, trials: int, seed: int,
                      n: int | None = None, rho=None,
                      ext: ExtendedFan | None = None,
                      params: ContractionParams | None = None,
                      chunk: int = 2000) -> TailCheck:
    """Empirical tail frequency against the analytic bound.

    binomial kinds sample the scaled binomial directly; fan kinds simulate
    whole contraction samples of the given extended fan.  Each (kind, N,
    rho, t) cell draws from its own derived stream, so grids are
    reproducible regardless of evaluation order.
    """
    if trials < 1:
        raise OutOfRangeError("trials must be positive")
    if kind in ("binomial_i", "binomial_ii"):
        if n is None or rho is None:
            raise OutOfRangeError("binomial kinds need n and rho")
        rho_f = float(Fraction(rho))
        tb = tail_bounds(kind, n, rho_f, t)
        gen = np_rng_for(seed, f"tails|{kind}|{n}|{rho_f}", 0)
        draws = gen.binomial(n, rho_f, size=trials)
        nu = draws / n
        if kind == "binomial_i":
            hits = int(np.count_nonzero(np.abs(nu - rho_f) > rho_f * t))
        else:
            ratio = nu / rho_f
            value = np.where(draws > 0, ratio * np.log(np.where(draws > 0, ratio, 1.0)), 0.0)
            hits = int(np.count_nonzero(value > t))
        return _finish_check(kind, n, rho_f, t, trials, hits, tb)

    if kind in ("totalvar", "height", "ikd"):
        if ext is None or params is None:
            raise OutOfRangeError("fan kinds need ext and params")
        n = params.N
        rho_f = float(params.rho)
        card, f = ext.x0_card, ext.fiber_size
        tb = tail_bounds(kind, n, rho_f, t, x0_card=card, size=ext.size_h)
        u_atoms = ext.u_space.atoms
        mask = np.zeros((len(u_atoms), card), dtype=np.int64)
        index = {x: k for k, x in enumerate(ext.x0_space.atoms)}
        for row, u in enumerate(u_atoms):
            for x in ext.fibers[u]:
                mask[row, index[x]] = 1
        pvals = np.array([float(w) for w in ext.u_space.weights])
        pvals = pvals / pvals.sum()
        gen = np_rng_for(seed, f"tails|{kind}|{n}|{rho_f}|{t}", 0)
        hits = 0
        done = 0
        log_card = math.log(card)
        while done < trials:
            batch = min(chunk, trials - done)
            mult = gen.multinomial(n, pvals, size=batch)
            counts = mult @ mask
            p = counts / float(n * f)
            if kind == "totalvar":
                stat = np.abs(p - 1.0 / card).sum(axis=1)
                hits += int(np.count_nonzero(stat > t))
            elif kind == "height":
                safe = np.where(counts > 0, counts, 1)
                stat = (counts * np.log(safe)).sum(axis=1) / float(n * f)
                hits += int(np.count_nonzero(stat > tb.threshold))
            else:  # ikd: measured through the witness-bound value
                two_alpha = np.abs(p - 1.0 / card).sum(axis=1)
                a = np.clip(two_alpha / 2.0, 1e-15, 1.0 - 1e-15)
                ent = -(a * np.log(a) + (1 - a) * np.log(1 - a))
                ent = np.where(two_alpha <= 0, 0.0, ent)
                stat = a * log_card + ent
                hits += int(np.count_nonzero(stat > t * log_card))
            done += batch
        return _finish_check(kind, n, rho_f, t, trials, hits, tb)

    raise UnknownKindError(f"unknown tail kind {kind!r}")
