import math
import warnings
from fractions import Fraction

import pytest

from probdiag import (
    ContractionParams,
    FanIndices,
    build_category,
    contract_once,
    coordinate_diagram,
    default_parameters,
    extend_admissible_fan,
    monte_carlo_tails,
    recover_collapsed_diagram,
    tail_bounds,
)
from probdiag.errors import (
    NotAdmissibleError,
    NotFanGeneratedError,
    OutOfRangeError,
    UnknownKindError,
)
from probdiag.fixtures import coord_lambda3, coord_two_fan

LN2 = math.log(2)


def quiet_default_parameters(ext, seed):
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        return default_parameters(ext, seed)


class TestExtendAdmissibleFan:
    def test_two_fan_point_shape(self):
        d, fi = coord_two_fan(6, range(1, 5), range(3, 7))
        ext = extend_admissible_fan(d, fi)
        assert ext.shape.objects == ("left",)
        # the joint with u reconstructs the whole top space
        assert len(ext.ydiag.spaces["left"]) == len(d.spaces["top"])
        assert ext.rho == Fraction(1, 4)
        assert ext.x0_card == 16

    def test_lambda3_three_objects(self):
        d, fi = coord_lambda3()
        ext = extend_admissible_fan(d, fi)
        assert set(ext.shape.objects) == {"x", "x1", "x2"}
        for obj in ext.shape.objects:
            assert len(ext.ydiag.spaces[obj]) >= len(ext.xdiag.spaces[obj])

    def test_not_admissible(self):
        cat = build_category(["z", "x", "u", "w"],
                             [("z", "x"), ("z", "u"), ("z", "w")])
        d = coordinate_diagram(cat, {"z": range(1, 4), "x": [1], "u": [2, 3],
                                     "w": [3]}, 3)
        with pytest.raises(NotAdmissibleError):
            extend_admissible_fan(d, FanIndices("x", "z", "u"))


class TestDefaultParameters:
    def test_regime_scale(self):
        d, fi = coord_two_fan(17, range(1, 16), range(14, 18))
        ext = extend_admissible_fan(d, fi)
        assert ext.x0_card == 2 ** 15 and ext.rho == Fraction(1, 4)
        params = default_parameters(ext, seed=1)
        # against high-precision arithmetic
        import mpmath

        mpmath.mp.dps = 40
        expected_n = int(mpmath.ceil(mpmath.log(2 ** 15) ** 3 * 4))
        assert params.N == expected_n == 4496
        assert params.t == pytest.approx(10.0 / (15 * LN2))
        assert params.t <= 1.0

    def test_small_scale_warns(self):
        d, fi = coord_two_fan(6, range(1, 5), range(3, 7))
        ext = extend_admissible_fan(d, fi)
        with pytest.warns(RuntimeWarning):
            params = default_parameters(ext, seed=1)
        assert params.N == 86
        assert params.t == pytest.approx(10.0 / (4 * LN2))

    def test_trivial_u(self):
        d, fi = coord_two_fan(4, range(1, 5), [])
        # right foot carries no coordinates: a one-point space, rho = 1
        ext = extend_admissible_fan(d, fi)
        assert ext.rho == 1
        params = quiet_default_parameters(ext, seed=0)
        assert params.N == math.ceil(math.log(16) ** 3)


class TestContractOnce:
    def test_dirac_u_is_identity_on_x_side(self):
        d, fi = coord_two_fan(4, range(1, 5), [])
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=20, t=0.5, rho=ext.rho, seed=3)
        run = contract_once(ext, params)
        assert run.alpha == 0
        assert run.coverage
        assert run.height == pytest.approx(math.log(20))
        assert run.xprime.spaces["left"] == d.spaces["left"]

    def test_exact_identities_over_seeds(self):
        d, fi = coord_two_fan(7, range(1, 6), range(5, 8))
        ext = extend_admissible_fan(d, fi)
        for seed in range(10):
            params = ContractionParams(N=150, t=0.5, rho=ext.rho, seed=seed)
            run = contract_once(ext, params)
            assert run.sum_nu == ext.rho * ext.x0_card
            assert run.total_mass == 1
            assert run.fiber_iso_ok
            via_fibers, via_difference = run.height_two_ways()
            assert via_fibers == pytest.approx(via_difference, abs=1e-9)

    def test_lambda3_run(self):
        d, fi = coord_lambda3()
        ext = extend_admissible_fan(d, fi)
        params = quiet_default_parameters(ext, seed=9)
        run = contract_once(ext, params)
        assert run.sum_nu == ext.rho * ext.x0_card
        assert run.fiber_iso_ok
        assert run.fan_prime is not None
        # the materialized fan is a valid fan of diagrams
        run.fan_prime._check_natural()

    def test_ikd_upper_backed_by_real_witness(self):
        # at small scale the reported bound is cross-checked against a
        # materialized witness coupling between the run and the x-side
        from probdiag import SetDiagram, local_estimate_witness

        d, fi = coord_lambda3()
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=25, t=0.5, rho=ext.rho, seed=11)
        run = contract_once(ext, params)
        assert run.coverage
        sd = SetDiagram.from_diagram(ext.xdiag)
        uniform_pi = {x: Fraction(1, ext.x0_card) for x in ext.x0_space.atoms}
        est = local_estimate_witness(sd, run.p_b0, uniform_pi)
        assert est.alpha == run.alpha
        assert est.bound == pytest.approx(run.ikd_upper, abs=1e-12)
        assert est.witness.kd_value <= run.ikd_upper + 1e-9

    def test_coverage_flag_and_rough_bound(self):
        d, fi = coord_two_fan(8, range(1, 7), range(5, 9))
        ext = extend_admissible_fan(d, fi)
        # N = 1 cannot cover 64 atoms through 16-atom fibers
        params = ContractionParams(N=1, t=0.5, rho=ext.rho, seed=0)
        run = contract_once(ext, params)
        assert not run.coverage
        assert run.rough_bound_used
        assert run.ikd_upper == pytest.approx(2 * ext.size_h * math.log(ext.x0_card))


class TestRecover:
    def test_two_fan_roundtrip_shape(self):
        d, fi = coord_two_fan(7, range(1, 6), range(5, 8))
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=40, t=0.5, rho=ext.rho, seed=5)
        run = contract_once(ext, params)
        out = recover_collapsed_diagram(d, fi, run)
        assert out.category == d.category
        assert out.spaces[fi.u_obj] == run.vspace
        assert out.spaces[fi.x_obj] == run.xprime.spaces[fi.x_obj]
        # initial space is the conditioned joint: N * fiber atoms
        assert len(out.initial_space) == 40 * ext.fiber_size

    def test_lambda3_shape(self):
        d, fi = coord_lambda3()
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=18, t=0.5, rho=ext.rho, seed=6)
        run = contract_once(ext, params)
        out = recover_collapsed_diagram(d, fi, run)
        assert out.category == d.category
        assert len(out.spaces["u"]) == 18
        vec_x1 = out.spaces["x1"]
        assert len(vec_x1) == len(d.spaces["x1"])

    def test_not_fan_generated(self):
        cat = build_category(["z", "x", "w", "u"],
                             [("z", "x"), ("z", "w"), ("w", "u")])
        d = coordinate_diagram(cat, {"z": range(1, 5), "x": [1, 2],
                                     "w": [2, 3, 4], "u": [3, 4]}, 4)
        fi = FanIndices("x", "z", "u")
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=10, t=0.5, rho=ext.rho, seed=7)
        run = contract_once(ext, params)
        with pytest.raises(NotFanGeneratedError):
            recover_collapsed_diagram(d, fi, run)


class TestTailBounds:
    def test_binomial_i_reference_value(self):
        tb = tail_bounds("binomial_i", 200, Fraction(1, 4), 0.5)
        assert tb.bound == pytest.approx(2 * math.exp(-25 / 6), rel=1e-12)
        assert tb.bound == pytest.approx(0.0310078, abs=1e-6)

    def test_t_zero_vacuous(self):
        assert tail_bounds("binomial_i", 100, 0.5, 0.0).bound == 2.0

    def test_range_errors(self):
        with pytest.raises(OutOfRangeError):
            tail_bounds("binomial_i", 100, 0.5, 1.5)
        with pytest.raises(OutOfRangeError):
            tail_bounds("binomial_ii", 100, 0.5, 2.5)
        with pytest.raises(UnknownKindError):
            tail_bounds("sideways", 100, 0.5, 0.5)

    def test_height_threshold_matches_size_cap(self):
        # with N rho = ln^3|x0| the run threshold ln(N rho) + t stays below
        # 4 ln ln|x0| exactly when t <= ln ln|x0|
        for card in (2 ** 10, 2 ** 15, 2 ** 20):
            log_card = math.log(card)
            n_rho = log_card ** 3
            n = int(round(n_rho / 0.25))
            tb = tail_bounds("height", n, 0.25, 0.5, x0_card=card)
            lnln = math.log(log_card)
            assert tb.threshold == pytest.approx(math.log(n * 0.25) + 0.5, abs=1e-9)
            assert (tb.threshold <= 4 * lnln + 1e-9) == (0.5 <= lnln + 1e-9)


class TestMonteCarloTails:
    def test_binomial_reference_cell(self):
        check = monte_carlo_tails("binomial_i", t=0.5, trials=100_000, seed=0,
                                  n=200, rho=Fraction(1, 4))
        # roughly a four-sigma event: far below the analytic bound
        assert check.empirical < 0.001
        assert check.passed

    def test_binomial_part_two(self):
        check = monte_carlo_tails("binomial_ii", t=1.0, trials=20_000, seed=0,
                                  n=200, rho=Fraction(1, 4))
        assert check.passed

    def test_edge_t_one(self):
        check = monte_carlo_tails("binomial_i", t=1.0, trials=1000, seed=0,
                                  n=50, rho=Fraction(1, 2))
        assert check.passed

    def test_fan_kinds_small(self):
        d, fi = coord_two_fan(7, range(1, 7), range(6, 8))
        ext = extend_admissible_fan(d, fi)
        params = ContractionParams(N=200, t=0.5, rho=ext.rho, seed=0)
        for kind in ("totalvar", "height", "ikd"):
            with warnings.catch_warnings():
                warnings.simplefilter("ignore")
                check = monte_carlo_tails(kind, t=0.5, trials=2000, seed=1,
                                          ext=ext, params=params)
            assert check.passed, kind

    def test_reproducible(self):
        a = monte_carlo_tails("binomial_i", t=0.3, trials=5000, seed=7,
                              n=50, rho=Fraction(1, 2))
        b = monte_carlo_tails("binomial_i", t=0.3, trials=5000, seed=7,
                              n=50, rho=Fraction(1, 2))
        assert a.empirical == b.empirical


def test_extend_rejects_inhomogeneous():
    from probdiag import standard_category, make_diagram, make_space
    from probdiag.errors import NotHomogeneousError

    cat = standard_category("two_fan")
    top = make_space(["a", "b", "c"], ["1/2", "1/4", "1/4"])
    left = make_space(["l0", "l1"], ["1/2", "1/2"])
    right = make_space(["r0", "r1"], ["3/4", "1/4"])
    d = make_diagram(cat, {"top": top, "left": left, "right": right},
                     {("top", "left"): {"a": "l0", "b": "l1", "c": "l1"},
                      ("top", "right"): {"a": "r0", "b": "r0", "c": "r1"}})
    with pytest.raises(NotHomogeneousError):
        extend_admissible_fan(d, FanIndices("left", "top", "right"))
