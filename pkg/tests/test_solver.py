import sys

import numpy as np
import pytest

from conftest import multiset_match, rank_one_perturbed
from hsdc import Route, Verdict, corpus, random_sdc_family, solve
from hsdc.detect import DetectReport
from hsdc.errors import NotPositiveDefinite, VerdictConflict


@pytest.mark.parametrize("name", corpus.names())
@pytest.mark.parametrize("route", ["sdp", "pencil", "both"])
def test_corpus_verdicts(name, route):
    out = solve(corpus.family(name), route=route)
    assert out.is_sdc == corpus.EXPECTED_SDC[name]
    if out.is_sdc:
        assert out.result.backward_error <= 1e-8
        assert out.result.is_nonsingular()
    else:
        assert out.result is None and out.detect.reasons


def test_noncommuting_sdc_triple_matches_known_transform():
    F = corpus.family("noncommuting_sdc_triple")
    P = corpus.NONCOMMUTING_SDC_TRANSFORM
    ref = np.array([np.diag(P.T @ c @ P) for c in F.members])  # (m, n)
    ref_offdiag = max(np.abs(P.T @ c @ P - np.diag(np.diag(P.T @ c @ P))).max() for c in F.members)
    assert ref_offdiag == 0
    out = solve(F)
    got = out.result.diagonals
    # each computed column equals a reference column up to a positive factor
    used = set()
    for j in range(3):
        g = got[:, j]
        for k in range(3):
            r = ref[:, k]
            s = (g @ r) / (r @ r)
            if k not in used and s > 0 and np.allclose(g, s * r, rtol=1e-8, atol=1e-10 * np.abs(g).max()):
                used.add(k)
                break
        else:
            pytest.fail(f"column {j} has no positive multiple among the reference diagonals")


def test_single_matrix_short_circuit():
    A = np.array([[2.0, 1.0, 0.0], [1.0, 2.0, 0.0], [0.0, 0.0, -1.0]])
    out = solve([A])
    assert out.is_sdc and out.feasibility is None
    assert out.result.backward_error <= 1e-15
    assert np.allclose(out.result.diagonals[0], [3, 1, -1])


def test_one_by_one():
    F, _, _ = random_sdc_family(1, 3, seed=0)
    out = solve(F)
    assert out.is_sdc and out.result.transform.shape == (1, 1)
    assert out.result.backward_error == 0


def test_random_family_protocol():
    F, P, D = random_sdc_family(4, 3, seed=5)
    assert F.m == 3 and F.n == 4 and F.is_real
    assert np.all((P >= 0) & (P < 1)) and np.all((D >= 0) & (D < 1))
    for c, d in zip(F.members, D):
        assert np.allclose(c, P.T @ np.diag(d) @ P)
    G, P2, _ = random_sdc_family(4, 3, seed=5)
    assert np.array_equal(P, P2)
    H, Pc, _ = random_sdc_family(3, 2, seed=1, complex_=True)
    assert not H.is_real and np.all((Pc.imag >= 0) & (Pc.imag < 1))
    with pytest.raises(ValueError):
        random_sdc_family(0, 2)


@pytest.mark.parametrize("n, m, target", [(3, 3, 3.33e-11), (20, 10, 8.64e-12)])
def test_benchmark_backward_error(n, m, target):
    errs = [solve(random_sdc_family(n, m, seed)[0]).result.backward_error for seed in range(3)]
    assert np.mean(errs) <= target


def test_end_to_end_constructed():
    rng = np.random.default_rng(8)
    for trial in range(200):
        n, m = int(rng.integers(1, 21)), int(rng.integers(1, 11))
        F, P, D = random_sdc_family(n, m, seed=1000 + trial, complex_=bool(trial % 2))
        out = solve(F)
        assert out.is_sdc
        res = out.result
        assert res.backward_error <= 1e-8, (trial, n, m, res.backward_error)
        for c, d in zip(F.members, res.diagonals):
            B = res.transform.conj().T @ c @ res.transform
            assert np.linalg.norm(B - np.diag(d)) <= 1e-8 * np.linalg.norm(c)


def test_negative_control_flip_rate():
    rng = np.random.default_rng(99)
    flips = 0
    for trial in range(200):
        n, m = int(rng.integers(2, 9)), int(rng.integers(3, 6))
        F, _, _ = random_sdc_family(n, m, seed=5000 + trial, complex_=bool(trial % 2))
        flips += not solve(rank_one_perturbed(rng, F)).is_sdc
    assert flips >= 190


def test_real_input_real_output():
    out = solve(random_sdc_family(6, 3, seed=2)[0])
    assert out.result.transform.dtype == np.float64
    assert out.result.diagonals.dtype == np.float64
    assert out.jacobi.U.dtype == np.float64


def test_complex_diagonals_are_real():
    F, P, D = random_sdc_family(5, 3, seed=4, complex_=True)
    out = solve(F)
    assert out.result.diagonals.dtype == np.float64
    assert np.iscomplexobj(out.result.transform)


def test_pencil_route_transform():
    out = solve(corpus.family("integer_triple_sdc"), route="pencil")
    assert out.detect.route is Route.PENCIL and out.result.backward_error <= 1e-8


def test_verdict_conflict(monkeypatch):
    solver = sys.modules["hsdc.solver"]
    monkeypatch.setattr(solver, "detect_via_pencil", lambda F, tol=None: DetectReport(Verdict.NOT_SDC, Route.PENCIL))
    with pytest.raises(VerdictConflict) as info:
        solve(corpus.family("integer_triple_sdc"), route="both")
    assert info.value.sdp_report.verdict is Verdict.SDC


def test_stage_label(monkeypatch):
    solver = sys.modules["hsdc.solver"]

    def boom(X, tol=None):
        raise NotPositiveDefinite(-1.0)

    monkeypatch.setattr(solver, "pd_sqrt", boom)
    with pytest.raises(NotPositiveDefinite) as info:
        solve(corpus.family("integer_triple_sdc"))
    assert info.value.stage == "sqrt"


def test_timings_and_report_consistency():
    out = solve(corpus.family("integer_triple_sdc"))
    assert {"sdp", "sqrt", "jacobi", "assemble"} <= set(out.timings)
    assert out.feasibility.found and out.detect.certificate is not None


def test_diagonals_recover_ground_truth_ratios():
    F, P, D = random_sdc_family(6, 4, seed=3)
    out = solve(F)
    # per column, the computed diagonal vector is a positive multiple of a true one
    got = out.result.diagonals / np.linalg.norm(out.result.diagonals, axis=0)
    ref = D / np.linalg.norm(D, axis=0)
    for i in range(F.m):
        assert multiset_match(got[i], ref[i]) <= 1e-6


def test_accepts_plain_lists():
    out = solve([[[1, 0], [0, 2]], [[0, 1], [1, 0]]])
    assert out.verdict in (Verdict.SDC, Verdict.NOT_SDC)
