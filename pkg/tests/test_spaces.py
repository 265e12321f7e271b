import math
import random
from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from probdiag import (
    condition_fiber,
    dirac,
    lambda_space,
    make_reduction,
    make_space,
    pushforward,
    special_space,
    tensor_spaces,
    tv_distance,
    uniform,
)
from probdiag.errors import (
    BadParamError,
    DuplicateAtomError,
    NegativeWeightError,
    NotSurjectiveError,
    UnknownAtomError,
    WeightSumError,
)
from conftest import random_reduction, random_space


class TestMakeSpace:
    def test_one_atom(self):
        x = make_space(["a"], ["1/1"])
        assert x.atoms == ("a",) and x.weight("a") == 1

    def test_uniform_two(self):
        x = make_space(["a", "b"], ["1/2", "1/2"])
        assert x == uniform(2) or sorted(x.weights) == sorted(uniform(2).weights)

    def test_bad_sum(self):
        with pytest.raises(WeightSumError):
            make_space(["a", "b"], ["1/3", "1/3"])

    def test_negative(self):
        with pytest.raises(NegativeWeightError):
            make_space(["a", "b"], [Fraction(3, 2), Fraction(-1, 2)])

    def test_duplicate(self):
        with pytest.raises(DuplicateAtomError):
            make_space(["a", "a"], ["1/2", "1/2"])

    def test_zero_weight_dropped(self):
        x = make_space(["a", "b"], [1, 0])
        assert x.atoms == ("a",)


class TestSpecialSpaces:
    def test_lambda_half_is_uniform(self):
        assert sorted(lambda_space(Fraction(1, 2)).weights) == sorted(uniform(2).weights)

    def test_uniform_four(self):
        x = uniform(4)
        assert len(x) == 4 and all(w == Fraction(1, 4) for w in x.weights)

    def test_lambda_zero_degenerates(self):
        assert len(lambda_space(0)) == 1
        assert len(lambda_space(1)) == 1

    def test_bad_param(self):
        with pytest.raises(BadParamError):
            special_space("lambda", Fraction(3, 2))
        with pytest.raises(BadParamError):
            special_space("uniform", 0)


class TestEntropy:
    def test_uniform_two(self):
        assert abs(uniform(2).entropy - math.log(2)) < 1e-15

    def test_dirac_zero(self):
        assert dirac().entropy == 0.0

    def test_lambda_quarter_against_high_precision(self):
        import mpmath

        mpmath.mp.dps = 50
        expected = float(
            mpmath.mpf(1) / 4 * mpmath.log(4) + mpmath.mpf(3) / 4 * mpmath.log(mpmath.mpf(4) / 3)
        )
        assert abs(lambda_space(Fraction(1, 4)).entropy - expected) < 1e-14
        assert abs(expected - 0.5623351446188083) < 1e-12


class TestTensor:
    def test_dirac_identity(self):
        x = random_space(random.Random(1))
        t = tensor_spaces(x, dirac())
        assert sorted(t.weights) == sorted(x.weights)

    def test_uniform_product(self):
        t = tensor_spaces(uniform(2), uniform(3))
        assert len(t) == 6 and all(w == Fraction(1, 6) for w in t.weights)

    def test_entropy_additive_on_random_pairs(self):
        rng = random.Random(2)
        for _ in range(100):
            x, y = random_space(rng), random_space(rng, prefix="b")
            assert abs(tensor_spaces(x, y).entropy - (x.entropy + y.entropy)) < 1e-12


class TestReduction:
    def test_identity_is_iso(self):
        x = uniform(3)
        r = make_reduction(x, {a: a for a in x.atoms})
        assert r.is_isomorphism()

    def test_uniform_pairing(self):
        x = uniform(4)
        r = make_reduction(x, {a: i // 2 for i, a in enumerate(x.atoms)})
        assert sorted(r.target.weights) == [Fraction(1, 2)] * 2

    def test_data_processing_on_random_reductions(self):
        rng = random.Random(3)
        for _ in range(100):
            r = random_reduction(rng)
            assert r.target.entropy <= r.domain.entropy + 1e-12

    def test_exact_mass_conservation(self):
        rng = random.Random(4)
        for _ in range(100):
            r = random_reduction(rng)
            assert sum(r.target.weights, Fraction(0)) == 1

    def test_declared_target_not_hit(self):
        x = uniform(2)
        with pytest.raises(NotSurjectiveError):
            make_reduction(x, {a: "t0" for a in x.atoms}, target_atoms=["t0", "t1"])


class TestConditioning:
    def test_identity_fiber_is_dirac(self):
        x = uniform(3)
        r = make_reduction(x, {a: a for a in x.atoms})
        for atom in x.atoms:
            assert len(condition_fiber(r, atom)) == 1

    def test_pairing_fiber_is_uniform(self):
        x = uniform(4)
        r = make_reduction(x, {a: i // 2 for i, a in enumerate(x.atoms)})
        fiber = condition_fiber(r, 0)
        assert sorted(fiber.weights) == [Fraction(1, 2)] * 2

    def test_unknown_atom(self):
        x = uniform(2)
        r = make_reduction(x, {a: "t" for a in x.atoms})
        with pytest.raises(UnknownAtomError):
            condition_fiber(r, "missing")

    def test_chain_rule_on_random_reductions(self):
        rng = random.Random(5)
        for _ in range(100):
            r = random_reduction(rng)
            mixture = sum(
                float(r.target.weight(u)) * condition_fiber(r, u).entropy
                for u in r.target.atoms
            )
            assert abs(r.domain.entropy - (r.target.entropy + mixture)) < 1e-9


class TestTotalVariation:
    def test_self_distance_zero(self):
        x = random_space(random.Random(6))
        assert tv_distance(x, x) == 0

    def test_disjoint_diracs(self):
        assert tv_distance(dirac("a"), dirac("b")) == 2

    def test_uniform_vs_lambda_quarter(self):
        base = make_space(["light", "heavy"], ["1/2", "1/2"])
        assert tv_distance(base, lambda_space(Fraction(1, 4))) == Fraction(1, 2)

    @settings(max_examples=200, deadline=None)
    @given(st.lists(st.integers(0, 12), min_size=2, max_size=6),
           st.lists(st.integers(0, 12), min_size=2, max_size=6),
           st.lists(st.integers(0, 12), min_size=2, max_size=6))
    def test_metric_properties(self, a, b, c):
        def to_dist(counts):
            total = sum(counts)
            if total == 0:
                counts = [1] * len(counts)
                total = len(counts)
            return {i: Fraction(v, total) for i, v in enumerate(counts)}

        p, q, r = to_dist(a), to_dist(b), to_dist(c)
        assert tv_distance(p, q) == tv_distance(q, p)
        assert tv_distance(p, q) >= 0
        # identity of indiscernibles on the positive parts: zero-weight
        # padding must not separate equal measures
        def support(d):
            return {k: v for k, v in d.items() if v > 0}
        assert (tv_distance(p, q) == 0) == (support(p) == support(q))
        assert tv_distance(p, r) <= tv_distance(p, q) + tv_distance(q, r)


def test_pushforward_preserves_mass_exactly():
    rng = random.Random(7)
    for _ in range(50):
        x = random_space(rng)
        mapping = {a: i % 3 for i, a in enumerate(x.atoms)}
        assert sum(pushforward(x, mapping).weights, Fraction(0)) == 1
