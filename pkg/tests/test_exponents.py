import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bqlab import exponents as ex
from bqlab.exponents import INF, ExponentPair

DIMS = range(2, 9)


def p_values(count=200):
    # 199 points in [2, 64] plus infinity
    return list(np.linspace(2, 64, count - 1)) + [INF]


class TestSoggeDelta:
    def test_examples(self):
        assert ex.sogge_delta(2, 2) == 0
        assert ex.sogge_delta(2, 6) == pytest.approx(1 / 6, abs=1e-15)
        assert ex.sogge_delta(2, INF) == 0.5

    def test_branches_meet(self):
        for n in DIMS:
            s = 1 / ex.sogge_critical(n)
            low, high = ex._delta_branches(n, s)
            assert abs(low - high) < 1e-12

    def test_nondecreasing(self):
        for n in DIMS:
            vals = [ex.sogge_delta(n, p) for p in p_values()]
            assert all(b >= a - 1e-15 for a, b in zip(vals, vals[1:]))

    @pytest.mark.parametrize("n,p", [(1, 2), (2, 1.5), (2, float("nan"))])
    def test_rejects(self, n, p):
        with pytest.raises(ValueError):
            ex.sogge_delta(n, p)


class TestBilinear:
    def test_examples(self):
        assert ex.bilinear_G(2, 2) == ExponentPair(-0.25, 0.0, 0.0)
        assert ex.bilinear_G(3, 2) == ExponentPair(-0.5, 0.0, 0.5)
        assert ex.bilinear_G(4, 2) == ExponentPair(-1.0, 0.0, 0.0)
        assert ex.bilinear_G(2, INF) == ExponentPair(-0.5, -0.5, 0.0)

    def test_mid_branch_n2(self):
        g = ex.bilinear_G(2, 4)
        assert g.h_exp == pytest.approx(-3 / 8)
        assert g.sigma_exp == pytest.approx(-1 / 8)

    def test_large_p_branch(self):
        # p=8 in n=2 and n=3
        assert ex.bilinear_G(2, 8).h_exp == -0.5
        assert ex.bilinear_G(2, 8).sigma_exp == pytest.approx(-0.25)
        assert ex.bilinear_G(3, 8).h_exp == -1.0
        assert ex.bilinear_G(3, 8).sigma_exp == pytest.approx(-1 + 3 / 8)

    @pytest.mark.parametrize("n", DIMS)
    def test_branch_continuity(self, n):
        for i, bp in enumerate(ex.breakpoints(n)):
            left = ex.bilinear_G_branch(n, bp, i)
            right = ex.bilinear_G_branch(n, bp, i + 1)
            assert abs(left.h_exp - right.h_exp) <= 1e-12
            assert abs(left.sigma_exp - right.sigma_exp) <= 1e-12

    @pytest.mark.parametrize("n", DIMS)
    def test_p2_slice(self, n):
        g = ex.bilinear_G(n, 2)
        assert g.sigma_exp == 0
        expected = {2: -0.25, 3: -0.5}.get(n, -(n - 2) / 2)
        assert g.h_exp == pytest.approx(expected, abs=1e-15)

    def test_log_only_at_3_2(self):
        for n in DIMS:
            for p in p_values(40):
                g = ex.bilinear_G(n, p)
                assert g.log_exp in (0.0, 0.5)
                assert (g.log_exp == 0.5) == (n == 3 and p == 2)

    def test_signs_and_ordering(self):
        for n in DIMS:
            for p in p_values(60):
                g = ex.bilinear_G(n, p)
                assert g.h_exp <= 0 and g.sigma_exp <= 0
                assert abs(g.sigma_exp) <= abs(g.h_exp) + 1e-15

    def test_branch_ids(self):
        assert [ex.branch_id(2, p) for p in (2, 3, 4, 6, 7, INF)] == [0, 0, 1, 1, 2, 2]
        assert [ex.branch_id(3, p) for p in (2, 4, 5)] == [0, 0, 1]


class TestSameScale:
    def test_examples(self):
        assert ex.same_scale_F(2, 3).h_exp == pytest.approx(-1 / 3)
        assert ex.same_scale_F(2, INF).h_exp == -1
        assert ex.same_scale_F(5, 2).h_exp == pytest.approx(-1.5)
        assert ex.same_scale_F(3, 2) == ExponentPair(-0.5, 0.0, 0.5)

    def test_both_n2_branches_agree_at_3(self):
        s = 1 / 3
        assert -0.5 + s / 2 == pytest.approx(-1 + 2 * s, abs=1e-15)

    @pytest.mark.parametrize("n", DIMS)
    def test_collapse_identity(self, n):
        for p in p_values(200):
            f, g = ex.same_scale_F(n, p), ex.bilinear_G(n, p)
            assert f.sigma_exp == 0
            assert abs(f.h_exp - g.total) <= 1e-12
            assert f.log_exp == g.log_exp


class TestEvalBound:
    def test_examples(self):
        assert ex.eval_bound(ExponentPair(-0.25), 1 / 16, 1 / 256) == pytest.approx(2.0, rel=1e-15)
        e = math.exp(-1)
        assert ex.eval_bound(ExponentPair(-0.5, 0, 0.5), e, e) == pytest.approx(math.exp(0.5), rel=1e-15)

    @pytest.mark.parametrize("h,s", [(1.0, 0.5), (0.5, 0.6), (0.0, 0.0), (0.5, -0.1), (1.5, 0.1)])
    def test_domain(self, h, s):
        with pytest.raises(ValueError):
            ex.eval_bound(ExponentPair(-0.25), h, s)


class TestBreakpoints:
    def test_examples(self):
        assert ex.breakpoints(2) == [3.0, 6.0]
        assert ex.breakpoints(3) == [4.0]
        assert ex.breakpoints(5) == [3.0]

    def test_rejects(self):
        with pytest.raises(ValueError):
            ex.breakpoints(1)


class TestHolder:
    def test_symmetric_split_at_equal_scales(self):
        # (4,4) split: total exponent 1/4 in lambda
        assert 2 * ex.sogge_delta(2, 4) == pytest.approx(0.25)
        assert ex.holder_baseline(2, 2, 1 / 16, 1 / 16) == pytest.approx(2.0, rel=1e-12)
        assert ex.eval_bound(ex.bilinear_G(2, 2), 1 / 16, 1 / 16) == pytest.approx(2.0, rel=1e-12)

    def test_sup_split_for_separated_scales(self):
        h, s = 1 / 16, 1e-8
        p1, p2 = ex.holder_best_split(2, 2, h, s)
        assert p1 == INF and p2 == 2
        assert ex.holder_baseline(2, 2, h, s) == pytest.approx(h**-0.5, rel=1e-12)

    def test_split_grid_contents(self):
        splits = ex.holder_splits(2, 2)
        assert len(splits) >= ex.HOLDER_GRID_SIZE
        for v in (0.0, 0.5, 0.25):
            assert np.any(splits == v)
        assert np.all((splits >= 0) & (splits <= 0.5))

    def _sample(self):
        dims = range(2, 12)
        ps = [2, 2.5, 3, 4, 5, 6, 8, 12, 32, INF]
        scales = []
        for h in (0.5, 0.2, 0.1, 1e-2, 1e-3):
            for r in (1.0, 0.5, 1e-2, 1e-4):
                scales.append((h, h * r))
        return dims, ps, scales

    def test_dominance(self):
        """The sharp law never exceeds the Hölder baseline (power-law part at (3,2))."""
        dims, ps, scales = self._sample()
        assert len(list(dims)) * len(ps) * len(scales) == 2000
        for n in dims:
            for p in ps:
                g = ex.bilinear_G(n, p)
                if g.log_exp:
                    g = ExponentPair(g.h_exp, g.sigma_exp)
                for h, s in scales:
                    assert ex.eval_bound(g, h, s) <= ex.holder_baseline(n, p, h, s) * (1 + 1e-9), (n, p, h, s)

    def test_log_factor_exceeds_baseline_near_diagonal(self):
        # at (3,2) with sigma = h the baseline is h^{-1/2} and the logged bound is larger
        h = 1e-3
        assert ex.eval_bound(ex.bilinear_G(3, 2), h, h) > ex.holder_baseline(3, 2, h, h)

    @pytest.mark.parametrize("n", DIMS)
    def test_strict_sigma_improvement_at_p2(self, n):
        baseline_growth = ex.sogge_delta(n, INF)  # split (inf, 2) has sigma exponent 0
        assert baseline_growth == pytest.approx((n - 1) / 2)
        assert -ex.bilinear_G(n, 2).h_exp < baseline_growth


@settings(max_examples=200, deadline=None)
@given(st.floats(min_value=2, max_value=1e6), st.integers(min_value=2, max_value=11))
def test_monotone_in_dimension(p, n):
    a, b = ex.bilinear_G(n, p), ex.bilinear_G(n + 1, p)
    assert -b.h_exp >= -a.h_exp - 1e-12
    assert -b.sigma_exp >= -a.sigma_exp - 1e-12


@settings(max_examples=200, deadline=None)
@given(
    st.integers(min_value=2, max_value=10),
    st.one_of(st.floats(min_value=2, max_value=1e4), st.just(INF)),
    st.floats(min_value=1e-6, max_value=0.9),
    st.floats(min_value=1e-4, max_value=1.0),
)
def test_dominance_property(n, p, h, ratio):
    s = h * ratio
    g = ex.bilinear_G(n, p)
    g = ExponentPair(g.h_exp, g.sigma_exp)
    assert ex.eval_bound(g, h, s) <= ex.holder_baseline(n, p, h, s) * (1 + 1e-9)


def test_parse_and_format_p():
    assert ex.parse_p("inf") == INF and ex.parse_p("∞") == INF
    assert ex.parse_p("4") == 4.0
    assert ex.format_p(INF) == "inf" and ex.format_p(8.0) == "8"


def test_exponent_row():
    row = ex.exponent_row(2, 2)
    assert (row["G_h"], row["G_sigma"]) == (-0.25, 0.0)
    assert row["holder_sup_h"] == -0.5
    assert row["branch"] == 0
    assert ex.exponent_row(3, 2)["G_log"] == 0.5
