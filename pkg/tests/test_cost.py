from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from mvqsd.cost import (
    DIMS,
    TABLE2_BEFORE,
    TABLE2_PRINTED,
    TABLE3_PRINTED,
    TABLE5_PRINTED,
    TABLE5_R_ASY,
    TABLE6_PRINTED,
    TABLE6_R_ASY,
    CostParams,
    PrintedCell,
    asymptotic_index,
    asymptotic_limit,
    closed_form_r_asy,
    comparison_counts,
    component_counts,
    efficiency_index,
    errata_report,
    lower_bound,
    model_gcx_count,
    savings_total,
    table3_discrepancies,
)
from mvqsd.csd import kappa

VERIFIED = {
    (3, 2): 26, (3, 3): 344, (3, 4): 3458, (4, 2): 90, (4, 3): 1926, (4, 4): 32886, (4, 5): 534582,
    (4, 6): 8587062, (5, 2): 176, (6, 2): 355, (6, 3): 15565, (6, 4): 577705, (6, 5): 20902225,
    (7, 2): 618, (7, 4): 1797210, (7, 5): 88346400, (8, 2): 980, (8, 3): 72716, (8, 4): 4735948,
    (8, 5): 303759820,
}


def test_component_counts():
    assert component_counts(3).as_tuple() == (9, 5, 3)
    assert component_counts(8).as_tuple() == (64, 56, 28)
    assert component_counts(2).as_tuple() == (4, 2, 1)
    with pytest.raises(ValueError):
        component_counts(1)


@pytest.mark.parametrize("cell,value", sorted(VERIFIED.items()))
def test_verified_cells(cell, value):
    assert model_gcx_count(*cell) == value


def test_derived_cells():
    assert model_gcx_count(5, 3) == 5576
    assert model_gcx_count(2, 1) == 0 and model_gcx_count(7, 1) == 0
    assert model_gcx_count(2, 2) == 5  # 2 diagonals x 2 + 1 set x 1


@pytest.mark.parametrize("d", range(2, 9))
def test_base_case_identity(d):
    k = kappa(d)
    assert model_gcx_count(d, 2) == (d * d - 2**k) * 2 * (d - 1) + d * (d - 1) // 2 * (d - 1)


# cells used to pin the per-diagonal cost, as (d, n)
FIT_CELLS = [(3, 2), (3, 3), (3, 4), (4, 2), (4, 3), (5, 2), (6, 2), (6, 3), (7, 2), (8, 2), (8, 3)]


def test_diag_cost_fit():
    # solve the recurrence for the diagonal cost using the printed cells and the rotation-set cost only
    for d, n in FIT_CELLS:
        b = component_counts(d)
        prev = 0 if n == 2 else TABLE2_PRINTED[(d, n - 1)].value
        m = n - 1
        rot = (d - 1) * (2 * d ** (m - 1) - 1)
        x = Fraction(TABLE2_PRINTED[(d, n)].value - d * d * prev - b.rotation_sets * rot, b.diagonals)
        assert x == 2 * (d**m - 1), (d, n, x)


def test_diag_cost_fit_unique():
    # any other constant at m=1 breaks at least one fitted cell
    for alt in (lambda d, m: 2 * d**m - 1, lambda d, m: 2 * (d**m - 1) + 1, lambda d, m: d**m):
        params_ok = []
        for d, n in FIT_CELLS:
            p = CostParams(diag_overrides={m: alt(d, m) for m in range(1, 8)})
            params_ok.append(model_gcx_count(d, n, p) == TABLE2_PRINTED[(d, n)].value)
        assert not all(params_ok)


def test_table2_non_errata_cells_match():
    flagged = {(e.d, e.n) for e in errata_report()}
    for (d, n), cell in TABLE2_PRINTED.items():
        if (d, n) not in flagged:
            assert cell.matches(model_gcx_count(d, n)), (d, n)
        else:
            assert not cell.matches(model_gcx_count(d, n)), (d, n)


def test_errata_have_neighbor_evidence():
    report = {(e.d, e.n): e for e in errata_report()}
    assert {(3, 5), (5, 3), (6, 6), (7, 3), (4, 7)} <= set(report)
    for e in report.values():
        assert len(e.evidence) >= 2
        assert e.kind in ("propagated", "term", "isolated", "unexplained")
        assert e.difference == TABLE2_PRINTED[(e.d, e.n)].value - e.recurrence
    assert report[(7, 3)].kind == "isolated"
    assert "1797210" in report[(7, 3)].evidence[-1]
    assert report[(6, 6)].difference == -435400 and report[(6, 6)].kind == "term"
    assert report[(3, 5)].recurrence == 32240
    assert report[(4, 7)].recurrence == 137528118
    for n in range(4, 9):
        assert report[(5, n)].kind == "propagated"
    for n in range(4, 7):  # exact cells carry the offset exactly
        assert report[(5, n)].difference == -360 * 25 ** (n - 3)


def test_printed_cells():
    c = PrintedCell("1.35e8")
    assert not c.is_exact and c.sig_digits == 3 and c.value == 135000000
    assert c.matches(134999999) and not c.matches(137528118)
    assert PrintedCell("5.39e10").matches(53958170576, truncate=True)
    assert not PrintedCell("5.39e10").matches(53958170576)
    assert PrintedCell("344").matches(344) and PrintedCell("5.2e6").sig_digits == 2


def test_lower_bound():
    for n in range(1, 11):
        assert lower_bound(2, n) == Fraction(4**n - 3 * n - 1, 4)
    assert lower_bound(2, 2) == Fraction(9, 4)
    assert lower_bound(3, 2) == 8
    assert lower_bound(2, 3) == Fraction(27, 2)


@given(st.integers(2, 8), st.integers(1, 8))
def test_lower_bound_identity(d, n):
    assert lower_bound(d, n) * 4 * (d - 1) + n * (d * d - 1) + 1 == d ** (2 * n)


@given(st.integers(2, 8), st.integers(2, 10))
def test_bound_below_model(d, n):
    assert lower_bound(d, n) <= model_gcx_count(d, n)


def test_savings():
    assert savings_total(3, 2) == 6
    assert savings_total(4, 2) == 18 == TABLE2_BEFORE[(4, 2)].value - TABLE2_PRINTED[(4, 2)].value
    assert savings_total(3, 3) == 60


@given(st.integers(2, 8), st.integers(2, 12))
def test_savings_identity(d, n):
    unsaved = model_gcx_count(d, n, CostParams(save_trailing=False))
    assert savings_total(d, n) == unsaved - model_gcx_count(d, n)


def test_qutrit_before_after_split():
    # before: 4 block factors of 3 blocks each (12 gates, 8 diagonals), no trailing-run savings
    d = 3
    before = 4 * (d - 1) * 2 * (d - 1) + component_counts(d).rotation_sets * 2 * (d - 1)
    assert before == TABLE2_BEFORE[(3, 2)].value == 44
    rearrangement = (12 - component_counts(d).gates) * model_gcx_count(d, 1) + (8 - component_counts(d).diagonals) * 4
    assert rearrangement == 12
    assert before - model_gcx_count(3, 2) == 18 == savings_total(3, 2) + rearrangement


@given(st.integers(2, 8), st.integers(2, 9))
def test_monotone(d, n):
    assert model_gcx_count(d, n + 1) > model_gcx_count(d, n)
    assert model_gcx_count(d, n) > 0


def test_asymptotic_limits_exact():
    expected = {2: Fraction(6, 5), 3: Fraction(9, 5), 4: Fraction(80, 41), 5: Fraction(300, 113),
                6: Fraction(315, 109), 7: Fraction(147, 46), 8: Fraction(576, 163)}
    for d, v in expected.items():
        assert asymptotic_limit(d) == v


@pytest.mark.parametrize("d", range(3, 9))
def test_asymptotic_limit_converges(d):
    assert abs(efficiency_index(d, 24) - float(asymptotic_limit(d))) <= 1e-9


def test_asymptotic_limit_converges_qubit():
    # the d=2 gap decays like 2^-n; n=24 leaves about 2e-7, so check further out
    assert abs(efficiency_index(2, 24) - 1.2) < 1e-6
    assert abs(efficiency_index(2, 40) - 1.2) <= 1e-9


def test_table3():
    for d in (3, 4, 6, 7, 8):
        assert abs(asymptotic_index(d).at_n8 - TABLE3_PRINTED[d]) <= 0.01
    assert set(table3_discrepancies()) == {5}
    assert abs(table3_discrepancies()[5][1] - 2.65) < 0.01
    assert abs(3**16 / 23744990 - 1.813) < 5e-4  # errata chain value, not the recurrence
    assert abs(efficiency_index(3, 8) - 1.8012) < 5e-4


def test_comparison_counts():
    assert comparison_counts("cdnot", 2) == 60
    assert comparison_counts("cdnot", 5) == 326400
    assert comparison_counts("qsd_l2_opt", 3) == 20
    assert comparison_counts("qsd_l1", 6) == 2976
    assert comparison_counts("cinc_csd", 2, d=3) == 36
    assert comparison_counts("before", 2, d=4) == 108
    with pytest.raises(ValueError):
        comparison_counts("gray", 3)
    with pytest.raises(ValueError):
        comparison_counts("cdnot", 1)
    with pytest.raises(ValueError):
        comparison_counts("cinc_csd", 3)


def test_table5_and_table6_exact():
    for n, cell in TABLE5_PRINTED.items():
        assert cell.matches(comparison_counts("cdnot", n))
    assert round(closed_form_r_asy("cdnot"), 2) == TABLE5_R_ASY
    for kind, row in TABLE6_PRINTED.items():
        assert [comparison_counts(kind, n) for n in range(2, 7)] == list(row)
        assert round(closed_form_r_asy(kind), 2) == TABLE6_R_ASY[kind]


def test_achieved_mode_costs():
    for d in range(2, 9):
        assert model_gcx_count(d, 2, CostParams(mode="achieved")) == model_gcx_count(d, 2)
    assert model_gcx_count(3, 3, CostParams(mode="achieved", scheme="fallback")) == 350
    with pytest.raises(ValueError):
        CostParams(mode="fitted")


def test_large_n_exact():
    v = model_gcx_count(8, 24)
    assert isinstance(v, int) and v > 10**40
    assert set(DIMS) == set(range(3, 9))
