import time

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from gazedepth.alignment import (
    Method, Normalize, ScanpathAligner, ScoringScheme, levenshtein_distance, pairwise_matrix,
    smith_waterman_score,
)

from oracles import brute_edit_distance, brute_local_alignment

DIM = 5


def random_seq(rng, n, dim=DIM):
    # mixed-sign entries so cosines cover [-1, 1]
    return [rng.normal(size=dim) for _ in range(n)]


def test_empty_inputs():
    rng = np.random.default_rng(0)
    s = random_seq(rng, 3)
    assert smith_waterman_score(s, []).score == 0.0
    assert smith_waterman_score([], []).score == 0.0
    assert levenshtein_distance([], s).score == 3.0
    assert levenshtein_distance(s, [], ScoringScheme(indel_cost=2.5)).score == 7.5


@pytest.mark.parametrize("n", [1, 2, 5, 9])
def test_identical_sequence_scores_length(n):
    s = random_seq(np.random.default_rng(n), n)
    res = smith_waterman_score(s, s)
    assert res.score == pytest.approx(n)
    assert res.normalized == pytest.approx(1.0)
    assert levenshtein_distance(s, s).score == pytest.approx(0.0, abs=1e-12)


def test_dimension_mismatch():
    with pytest.raises(ValueError, match="dimension"):
        smith_waterman_score([np.ones(3)], [np.ones(4)])
    with pytest.raises(ValueError, match="dimension"):
        levenshtein_distance([np.ones(3)], [np.ones(4)])


def test_sw_matches_brute_force_on_200_pairs():
    rng = np.random.default_rng(2024)
    start = time.perf_counter()
    failures = 0
    for _ in range(200):
        a = random_seq(rng, int(rng.integers(0, 4)))
        b = random_seq(rng, int(rng.integers(0, 4)))
        if abs(smith_waterman_score(a, b).score - brute_local_alignment(a, b)) > 1e-9:
            failures += 1
    assert failures == 0
    assert time.perf_counter() - start < 60


def test_levenshtein_matches_brute_force():
    rng = np.random.default_rng(77)
    for _ in range(150):
        a = random_seq(rng, int(rng.integers(0, 5)))
        b = random_seq(rng, int(rng.integers(0, 5)))
        assert levenshtein_distance(a, b).score == pytest.approx(brute_edit_distance(a, b), abs=1e-9)


def test_custom_scheme_matches_oracle():
    rng = np.random.default_rng(5)
    scheme = ScoringScheme(gap_penalty=0.2, sub_scale=1.5, sub_offset=-0.4)
    for _ in range(40):
        a, b = random_seq(rng, 3), random_seq(rng, 2)
        assert smith_waterman_score(a, b, scheme).score == pytest.approx(
            brute_local_alignment(a, b, 0.2, 1.5, -0.4), abs=1e-9)


seeds = st.integers(0, 2 ** 32 - 1)


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(0, 7), st.integers(0, 7))
def test_sw_swap_invariant_and_nonnegative(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_seq(rng, n), random_seq(rng, m)
    s = smith_waterman_score(a, b).score
    assert s >= 0
    assert s == pytest.approx(smith_waterman_score(b, a).score, abs=1e-12)


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(0, 6), st.integers(0, 6))
def test_sw_appending_shared_item_never_decreases(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_seq(rng, n), random_seq(rng, m)
    v = rng.normal(size=DIM)
    assert smith_waterman_score(a + [v], b + [v]).score >= smith_waterman_score(a, b).score - 1e-12


@settings(max_examples=80, deadline=None)
@given(seeds, st.integers(0, 6), st.integers(0, 6))
def test_levenshtein_identity_and_symmetry(seed, n, m):
    rng = np.random.default_rng(seed)
    a, b = random_seq(rng, n), random_seq(rng, m)
    assert levenshtein_distance(a, a).score == pytest.approx(0.0, abs=1e-12)
    assert levenshtein_distance(a, b).score == pytest.approx(levenshtein_distance(b, a).score,
                                                             abs=1e-12)


def test_substitution_mapping():
    sch = ScoringScheme()
    assert sch.substitution(1.0) == 1.0 and sch.substitution(0.0) == -1.0
    assert sch.substitution_cost(1.0) == 0.0 and sch.substitution_cost(-1.0) == 1.0
    with pytest.raises(ValueError):
        ScoringScheme(gap_penalty=-0.1)
    with pytest.raises(ValueError):
        ScoringScheme(indel_cost=0.0)


def test_normalization_options():
    rng = np.random.default_rng(9)
    a, b = random_seq(rng, 2), random_seq(rng, 5)
    raw = smith_waterman_score(a, b, ScoringScheme(normalize=Normalize.NONE))
    assert raw.normalized is None
    assert smith_waterman_score(a, b).normalized == pytest.approx(raw.score / 5)
    assert smith_waterman_score(a, b, ScoringScheme(normalize="min")).normalized == pytest.approx(
        raw.score / 2)


# ------------------------------------------------------------------ matrices

def test_identical_sequences_give_zero_levenshtein_matrix():
    s = random_seq(np.random.default_rng(1), 4)
    sm = pairwise_matrix([s, list(s), list(s)], Method.LEVENSHTEIN)
    assert np.allclose(sm.values, 0.0)


def test_matrix_matches_per_pair_calls():
    rng = np.random.default_rng(8)
    seqs = [random_seq(rng, k) for k in (4, 6, 5)]
    for method, fn in (("sw", smith_waterman_score), ("levenshtein", levenshtein_distance)):
        sm = pairwise_matrix(seqs, method)
        for i in range(3):
            for j in range(3):
                expected = 0.0 if (method == "levenshtein" and i == j) else fn(seqs[i], seqs[j]).score
                assert sm.values[i, j] == pytest.approx(expected, abs=1e-12)
        assert np.array_equal(sm.values, sm.values.T)


def test_matrix_errors_carry_pair_context():
    good = [np.ones(3)]
    with pytest.raises(ValueError, match=r"pair \(0, 2\)"):
        pairwise_matrix([good, good, [np.ones(4)]], "sw")
    with pytest.raises(ValueError, match="at least 2"):
        pairwise_matrix([good], "sw")


def test_matrix_csv_has_provenance_comments(tmp_path):
    rng = np.random.default_rng(4)
    sm = pairwise_matrix([random_seq(rng, 2), random_seq(rng, 3)], "sw", ids=["a", "b"])
    text = sm.to_csv(tmp_path / "m.csv")
    lines = text.splitlines()
    assert "# method=sw" in lines
    assert "# gap_penalty=0.5" in lines
    assert any(ln.startswith("# sw_substitution=2.0*cosine-1.0") for ln in lines)
    assert [ln for ln in lines if not ln.startswith("#")][0] == "id,a,b"
    assert (tmp_path / "m.csv").read_text() == text


def test_aligner_estimator():
    rng = np.random.default_rng(6)
    seqs = [random_seq(rng, 3) for _ in range(3)]
    al = ScanpathAligner(method="levenshtein").fit(seqs, ["x", "y", "z"])
    assert al.similarity_.ids == ["x", "y", "z"]
    assert al.matrix_[0, 1] == pytest.approx(levenshtein_distance(seqs[0], seqs[1]).score)
    assert al.get_params()["gap_penalty"] == 0.5
    with pytest.raises(ValueError):
        ScanpathAligner(method="dtw").fit(seqs)
