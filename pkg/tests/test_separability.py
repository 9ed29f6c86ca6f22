import dataclasses
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from ia_workbench.separability import (
    admissible_ms,
    assemble_F,
    choose_extension_length,
    desired_square_block,
    draw_construction,
    is_admissible,
    rank_certificate,
    smallest_admissible_m,
    step1_specialization_check,
    step2_induction_trace,
    verify_separability,
)


@pytest.mark.parametrize("M,N,R,m,V,I,n", [
    (2, 2, 1, 2, 1, 3, 5),
    (3, 2, 1, 3, 1, 4, 7),
    (3, 2, 2, 8, 28, 84, 126),
])
def test_extension_length(M, N, R, m, V, I, n):
    p = choose_extension_length(M, N, R, m)
    assert (p.signal_dim, p.interference_dim, p.n) == (V, I, n)


def test_decomposed_three_by_three_example():
    # 6 x 3 SIMO with R = 2: nR = 6|V| + 4|I|, i.e. 2n = 10|V| asymptotically
    p = choose_extension_length(6, 3, 2, smallest_admissible_m(6, 3, 2))
    assert 2 * p.n == 6 * p.signal_dim + 2 * 2 * p.interference_dim


def test_inadmissible_m_reports_next_choice():
    with pytest.raises(ValueError, match="smallest admissible m is 8"):
        choose_extension_length(3, 2, 2, 6)
    with pytest.raises(ValueError, match="below L=6"):
        choose_extension_length(3, 2, 2, 5)
    with pytest.raises(ValueError, match="zero forcing"):
        choose_extension_length(2, 2, 2, 8)


def test_smallest_admissible_m():
    assert smallest_admissible_m(3, 2, 2) == 8
    assert smallest_admissible_m(2, 2, 1) == 2
    assert admissible_ms(3, 2, 1, 3) == [3, 4, 5]


small_regimes = st.tuples(st.integers(2, 4), st.integers(2, 3), st.integers(1, 3)).filter(
    lambda t: t[2] < t[0] and t[0] * t[2] * (t[1] - 1) <= 12)


@given(small_regimes, st.integers(0, 30))
def test_dimension_identity(regime, offset):
    M, N, R = regime
    m = smallest_admissible_m(M, N, R, M * R * (N - 1) + offset)
    assert is_admissible(M, N, R, m)
    p = choose_extension_length(M, N, R, m)
    assert p.n * R == M * p.signal_dim + R * (N - 1) * p.interference_dim
    assert p.signal_dim == math.comb(m, p.L)


@pytest.mark.parametrize("M,N,R,m,desired,interf", [
    (2, 2, 1, 2, 2, 3),
    (3, 2, 1, 3, 3, 4),
    (2, 3, 1, 4, 2, 10),
])
def test_F_shape_and_layout(M, N, R, m, desired, interf):
    F = assemble_F(draw_construction(M, N, R, m, seed=1))
    size = desired + interf
    assert F.shape == (size, size)
    kinds = [lab[0] for lab in F.col_labels]
    assert kinds.count("desired") == desired and kinds.count("interference") == interf
    assert F.row_labels == tuple((t, 0) for t in range(size))


def test_large_F_shape():
    con = draw_construction(3, 2, 2, 8, seed=0)
    F = assemble_F(con)
    assert F.shape == (252, 252)
    assert F.row_labels[:3] == ((0, 0), (0, 1), (1, 0))


def test_F_entries_follow_definition():
    con = draw_construction(3, 2, 2, 8, seed=2)
    F = assemble_F(con)
    ch, V = con.channels, con.signal[0].matrix
    row = {lab: p for p, lab in enumerate(F.row_labels)}
    col = {lab: p for p, lab in enumerate(F.col_labels)}
    t, r, i, c = 17, 1, 2, 5
    assert F.F[row[t, r], col["desired", i, c]] == pytest.approx(ch.coeff(0, i, r, t) * V[t, c], rel=1e-15)
    I1 = con.interference[1].matrix
    assert F.F[row[t, r], col["interference", 1, 9, r]] == I1[t, 9]
    assert F.F[row[t, 0], col["interference", 1, 9, 1]] == 0


def test_natural_form_has_kronecker_interference():
    con = draw_construction(3, 2, 2, 8, seed=3)
    F = assemble_F(con)
    nat, rows, cols = F.natural_form()
    p = con.plan
    E = nat[:, p.M * p.signal_dim:]
    assert np.array_equal(E, np.kron(np.eye(p.R), con.interference[1].matrix))
    D_top = nat[: p.n, : p.M * p.signal_dim]
    expect = np.hstack([con.channels.diagonal(0, i, 0)[:, None] * con.signal[0].matrix
                        for i in range(p.M)])
    assert np.array_equal(D_top, expect)
    assert sorted(rows) == list(range(252)) and sorted(cols) == list(range(252))


def test_rank_certificate_basic():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((6, 6)) + 1j * rng.standard_normal((6, 6))
    cert = rank_certificate(A)
    assert cert.full_rank and cert.sigma_min > 0
    np.testing.assert_allclose([cert.sigma_min, cert.sigma_max],
                               np.linalg.svd(A, compute_uv=False)[[-1, 0]])
    B = A.copy()
    B[:, 4] = B[:, 1]
    bad = rank_certificate(B)
    assert not bad.full_rank and bad.ratio < 1e-14


def test_rank_certificate_errors():
    with pytest.raises(ValueError, match="square"):
        rank_certificate(np.ones((2, 3)))
    with pytest.raises(ValueError, match="non-finite"):
        rank_certificate(np.array([[1.0, np.nan], [0.0, 1.0]]))


def test_duplicated_F_columns_fail():
    F = assemble_F(draw_construction(2, 2, 1, 2, seed=0)).F.copy()
    F[:, 3] = F[:, 0]
    assert not rank_certificate(F).full_rank


@pytest.mark.parametrize("M,N,R,m", [(2, 2, 1, 2), (3, 2, 1, 3), (2, 3, 1, 4)])
def test_F_full_rank_over_seeds(M, N, R, m):
    assert all(verify_separability(M, N, R, m, s).passed for s in range(100))


def test_separability_result_json():
    doc = verify_separability(2, 2, 1, 2, 7).to_dict()
    assert set(doc) == {"config", "m", "n", "counts", "sigma_min", "sigma_max", "pass", "seed"}
    assert doc["n"] == 5 and doc["pass"] is True


def test_step1_unit_blocks():
    rep = step1_specialization_check(draw_construction(3, 2, 1, 3, seed=0))
    assert rep.passed and rep.block_diagonal and rep.signal_basis_unchanged
    assert len(rep.block_certificates) == 3
    assert all(b.sigma_min > 0 for b in rep.block_certificates)


def test_step1_large_blocks():
    for seed in range(3):
        con = draw_construction(3, 2, 2, 8, seed=seed)
        rep = step1_specialization_check(con)
        assert rep.passed and len(rep.block_certificates) == 3
        assert rep.unspecialized.full_rank


def test_step1_precondition():
    with pytest.raises(ValueError, match="zero forcing"):
        draw_construction(2, 2, 2, 8, seed=0)
    con = draw_construction(3, 2, 2, 8, seed=0)
    forged = dataclasses.replace(con, plan=dataclasses.replace(con.plan, M=2))
    with pytest.raises(ValueError, match="R < M"):
        step1_specialization_check(forged)


def test_step1_leaves_shared_channels_alone():
    con = draw_construction(3, 2, 1, 3, seed=4)
    before = con.channels.coeffs.copy()
    step1_specialization_check(con)
    assert np.array_equal(con.channels.coeffs, before)
    assert np.all(con.channels.coeffs != 0)


def test_desired_square_block_is_antenna_major():
    con = draw_construction(3, 2, 2, 8, seed=5)
    D = desired_square_block(con)
    p = con.plan
    assert D.shape == (p.M * p.signal_dim,) * 2
    # row T + t is antenna 1 at channel use t
    np.testing.assert_array_equal(D[p.T + 4, :p.signal_dim],
                                  con.channels.coeff(0, 0, 1, 4) * con.signal[0].matrix[4])


@pytest.mark.parametrize("M,N,R,m,steps", [(2, 2, 1, 2, 3), (3, 2, 1, 3, 4), (2, 3, 1, 4, 10)])
def test_induction_trace(M, N, R, m, steps):
    tr = step2_induction_trace(draw_construction(M, N, R, m, seed=3))
    assert len(tr.steps) == steps
    assert tr.all_full_rank and tr.matches_direct
    assert [s.kappa for s in tr.steps] == list(range(1, steps + 1))


def test_induction_with_two_antennas_and_permutation():
    con = draw_construction(3, 2, 2, 8, seed=0)
    tr = step2_induction_trace(con)
    assert len(tr.steps) == 84 and tr.all_full_rank and tr.matches_direct
    assert sorted(tr.row_permutation) == list(range(252))
    assert sorted(tr.col_permutation) == list(range(252))


def test_induction_detects_zeroed_column():
    con = draw_construction(3, 2, 1, 3, seed=1)
    tr = step2_induction_trace(con, zero_steps={2})
    assert tr.steps[0].full_rank
    assert not tr.steps[1].full_rank
    assert not tr.matches_direct


def test_induction_step_indices_follow_receiver_blocks():
    tr = step2_induction_trace(draw_construction(2, 3, 1, 4, seed=0))
    assert [(s.receiver_l, s.column_k) for s in tr.steps] == \
        [(1, k) for k in range(5)] + [(2, k) for k in range(5)]


@settings(max_examples=10, deadline=None)
@given(st.integers(0, 10**6))
def test_desired_block_full_column_rank(seed):
    con = draw_construction(3, 2, 1, 4, seed)
    D = assemble_F(con).block("desired")
    s = np.linalg.svd(D, compute_uv=False)
    assert D.shape[1] == 12 and s[-1] / s[0] > 1e-8
