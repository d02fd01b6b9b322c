import math

import numpy as np
import pytest
from scipy.integrate import quad
from scipy.linalg import expm, logm

from traceineq.densities import QuadratureError, make_quadrature
from traceineq.inequalities import (
    COUNTEREXAMPLES,
    EX_MAT1_A2_AS_PRINTED,
    MatrixTuple,
    alt_classic,
    alt_general,
    alt_multi,
    alt_sup_form,
    counterexample_report,
    gamma_average,
    gamma_curve,
    gamma_kappa,
    gt_classic,
    gt_general,
    gt_multi,
    gt_multi_integrand,
    kappa,
    lie_trotter,
    lieb_triple_rhs,
    normal_pair_check,
    our_gt3_rhs,
    peierls_bogoliubov_check,
)
from traceineq.linalg import DomainError, dagger, hermitian_eig, matrix_exp, matrix_log
from traceineq.random import (
    ginibre,
    random_hermitian,
    random_psd,
    random_unitary,
    rng_for,
)

Q0 = make_quadrature(0.0, 1e-10)


def commuting_hermitians(n, d, rng):
    U = random_unitary(d, rng)
    return [(U * rng.normal(size=d)) @ dagger(U) for _ in range(n)]


def test_matrix_tuple_validation():
    with pytest.raises(ValueError):
        MatrixTuple([np.eye(2), np.eye(3)])
    with pytest.raises(ValueError):
        MatrixTuple([np.array([[0, 1], [0, 0]])], "hermitian")
    with pytest.raises(ValueError):
        MatrixTuple([-np.eye(2)], "psd")
    with pytest.raises(ValueError):
        MatrixTuple([], "general")
    assert MatrixTuple([np.eye(3)], "psd").dim == 3


def test_gt_classic_examples():
    rep = gt_classic(np.diag([1.0, 0.0]), np.diag([0.0, 1.0]))
    assert rep.lhs_log == pytest.approx(math.log(2 * math.e))
    assert rep.gap == pytest.approx(0.0, abs=1e-12)
    rep = gt_classic(np.zeros((3, 3)), np.zeros((3, 3)))
    assert rep.lhs_log == pytest.approx(math.log(3))
    rng = rng_for(1)
    rep = gt_classic(random_hermitian(3, rng, 2), random_hermitian(3, rng, 2))
    assert rep.gap > 0


def test_alt_classic_examples():
    rng = rng_for(2)
    A1, A2 = random_psd(3, rng), random_psd(3, rng)
    assert alt_classic(A1, A2, 1.3, 1.0).gap == pytest.approx(0.0, abs=1e-12)
    assert alt_classic(np.diag([1.0, 2.0]), np.diag([3.0, 0.5]), 2.0, 0.4).gap == pytest.approx(0.0, abs=1e-12)
    assert alt_classic(A1, A2, 1.0, 0.5).gap >= 0
    with pytest.raises(ValueError):
        alt_classic(A1, A2, 1.0, 1.5)


def test_gt_multi_single_matrix():
    H = random_hermitian(3, rng_for(3))
    assert gt_multi([H], p=2).gap == pytest.approx(0.0, abs=1e-10)


def test_gt_multi_n2_constant_and_reduces_to_gt():
    rng = rng_for(4)
    H1, H2 = random_hermitian(3, rng, 2), random_hermitian(3, rng, 2)
    vals = gt_multi_integrand([H1, H2], 2.0, np.linspace(-8, 8, 81))
    assert np.ptp(vals) <= 1e-10
    rep = gt_multi([H1 / 2, H2 / 2], p=2)
    # ||e^{H1/2} e^{H2/2}||_2^2 = tr e^{H1} e^{H2} up to a unitary-invariant rotation
    assert 2 * rep.rhs_log == pytest.approx(gt_classic(H1, H2).rhs_log, abs=1e-10)
    assert 2 * rep.lhs_log == pytest.approx(gt_classic(H1, H2).lhs_log, abs=1e-10)


def test_gt_multi_random_n4():
    for i in range(10):
        rng = rng_for(5, i)
        Hs = [random_hermitian(3, rng, 2) for _ in range(4)]
        assert gt_multi(Hs, p=2).gap >= -1e-8


def test_gt_multi_rejects_small_p_and_bad_certificate():
    H = [np.eye(2)]
    with pytest.raises(ValueError):
        gt_multi(H, p=0.5)
    coarse = make_quadrature(0.0, 1e-3)
    with pytest.raises(QuadratureError):
        gt_multi([10 * np.eye(2), np.eye(2)], p=2, quad=coarse, max_error=1e-8)


def test_alt_multi_r1_equality():
    rng = rng_for(6)
    As = [random_psd(3, rng) for _ in range(3)]
    assert alt_multi(As, p=2, r=1.0).gap == pytest.approx(0.0, abs=1e-10)


def test_alt_multi_reduces_to_alt_classic():
    rng = rng_for(7)
    A1, A2 = random_psd(3, rng), random_psd(3, rng)
    q, r = 1.0, 0.5
    s1, s2 = hermitian_eig(A1), hermitian_eig(A2)
    root = lambda e: (e.eigenvectors * np.sqrt(np.clip(e.eigenvalues, 0, None))) @ dagger(e.eigenvectors)
    rep = alt_multi([root(s1), root(s2)], p=2 * q, r=r)
    ref = alt_classic(A1, A2, q, r)
    # log || |sqrt(A1)^r sqrt(A2)^r|^{1/r} ||_{2q} = (1/(2q)) log tr (A1^{r/2} A2^r A1^{r/2})^{q/r}
    assert 2 * q * rep.lhs_log == pytest.approx(ref.lhs_log, abs=1e-8)
    assert 2 * q * rep.rhs_log == pytest.approx(ref.rhs_log, abs=1e-8)


def test_alt_multi_random_n3():
    for i in range(10):
        rng = rng_for(8, i)
        As = [random_psd(3, rng) for _ in range(3)]
        assert alt_multi(As, p=2, r=0.5).gap >= -1e-8


def test_alt_multi_with_singular_factor():
    rng = rng_for(9)
    As = [random_psd(3, rng, rank=2), random_psd(3, rng), random_psd(3, rng)]
    rep = alt_multi(As, p=2, r=0.5)
    assert np.isfinite(rep.rhs_log) and rep.gap >= -1e-8


def test_commuting_tuples_are_equalities():
    for i in range(10):
        rng = rng_for(10, i)
        Hs = commuting_hermitians(3, 3, rng)
        assert abs(gt_multi(Hs, p=2).gap) <= 1e-8
        As = [matrix_exp(H) for H in Hs]
        assert abs(alt_multi(As, p=3, r=0.3).gap) <= 1e-8


def test_alt_rhs_tends_to_gt_rhs():
    rng = rng_for(11)
    Hs = [random_hermitian(3, rng) for _ in range(3)]
    As = [matrix_exp(H) for H in Hs]
    target = gt_multi(Hs, p=2).rhs_log
    errs = [abs(alt_multi(As, p=2, r=r).rhs_log - target) for r in (0.2, 0.1, 0.05, 0.01)]
    assert all(b < a for a, b in zip(errs, errs[1:]))
    assert errs[-1] <= 1e-3


def test_sup_form_commuting_and_n2():
    rng = rng_for(12)
    As = [matrix_exp(H) for H in commuting_hermitians(3, 3, rng)]
    rep = alt_sup_form(As, p=2, r=0.5, t_grid=np.linspace(-3, 3, 13))
    assert np.ptp(rep.params["profile"]) <= 1e-10
    assert rep.gap == pytest.approx(0.0, abs=1e-10)
    A2 = [random_psd(3, rng), random_psd(3, rng)]
    pts = rng.normal(size=(20, 2)) * 3
    prof = alt_sup_form(A2, p=2, t_grid=pts).params["profile"]
    assert np.ptp(prof) <= 1e-10
    assert alt_sup_form(A2, p=2).params["rhs_is_grid_lower_bound"]


def test_sup_form_quasi_norm_and_empty_grid():
    rng = rng_for(13)
    As = [matrix_exp(H) for H in commuting_hermitians(3, 2, rng)]
    assert abs(alt_sup_form(As, p=0.5, t_grid=[0.0, 1.0]).gap) <= 1e-10
    with pytest.raises(ValueError):
        alt_sup_form(As, p=2, t_grid=[])


def test_sup_form_counterexample_profile_matches_gamma():
    A1, A2, A3 = COUNTEREXAMPLES[1]
    grid = np.round(np.arange(-60, 61) * 0.05, 10)
    roots = [matrix_exp(0.5 * matrix_log(A)) for A in (A3, A2, A1)]
    rep = alt_sup_form(roots, p=2, t_grid=grid)
    # || A3^{1/2} A2^{(1+it)/2} A1^{1/2} ||_2^2 = gamma(t)
    assert np.allclose(2 * rep.params["profile"], np.log(gamma_curve(A1, A2, A3, grid)), atol=1e-12)


def test_sup_form_bounded_by_integral_form():
    for i in range(5):
        rng = rng_for(14, i)
        As = [random_psd(3, rng) for _ in range(3)]
        integral = alt_multi(As, p=2, r=0.5)
        sup = alt_sup_form(As, p=2, r=0.5, t_grid=np.linspace(-4, 4, 41))
        assert sup.lhs_log == pytest.approx(integral.lhs_log)
        assert sup.rhs_log >= integral.rhs_log - 1e-9


def test_gt_general_hermitian_matches_gt_multi():
    rng = rng_for(15)
    Hs = [random_hermitian(3, rng) for _ in range(3)]
    a, b = gt_general(Hs, p=2), gt_multi(Hs, p=2)
    assert a.lhs_log == pytest.approx(b.lhs_log, abs=1e-10)
    assert a.rhs_log == pytest.approx(b.rhs_log, abs=1e-10)


def test_gt_general_antihermitian():
    rng = rng_for(16)
    Ls = [1j * random_hermitian(3, rng) for _ in range(2)]
    rep = gt_general(Ls, p=2)
    assert rep.lhs_log == pytest.approx(0.5 * math.log(3), abs=1e-10)
    assert rep.rhs_log == pytest.approx(0.5 * math.log(3), abs=1e-10)


def test_gt_general_random():
    for i in range(10):
        rng = rng_for(17, i)
        Ls = [ginibre(3, rng) for _ in range(3)]
        assert gt_general(Ls, p=1 + i % 3).gap >= -1e-8


def test_normal_pair():
    for i in range(10):
        rng = rng_for(18, i)
        U = random_unitary(3, rng)
        N1 = (U * (rng.normal(size=3) + 1j * rng.normal(size=3))) @ dagger(U)
        V = random_unitary(3, rng)
        N2 = (V * (rng.normal(size=3) + 1j * rng.normal(size=3))) @ dagger(V)
        assert normal_pair_check(N1, N2, p=2).gap >= -1e-10


def test_alt_general_cases():
    rng = rng_for(19)
    L = ginibre(3, rng)
    H = random_hermitian(3, rng)
    assert alt_general([H], p=2, r=0.5).gap == pytest.approx(0.0, abs=1e-10)
    for i in range(10):
        rng = rng_for(20, i)
        Ls = [ginibre(3, rng) for _ in range(2)]
        assert alt_general(Ls, p=2, r=0.5).gap >= -1e-8
    with pytest.raises(ValueError):
        alt_general([L], p=2, r=1.0)


def test_alt_general_hermitian_small_r_approaches_gt():
    rng = rng_for(21)
    Hs = [random_hermitian(3, rng) for _ in range(3)]
    target = gt_multi(Hs, p=2)
    errs = [abs(alt_general(Hs, p=2, r=r).rhs_log - target.rhs_log) for r in (0.2, 0.05, 0.01)]
    assert all(b < a for a, b in zip(errs, errs[1:]))


def test_alt_general_hermitian_matches_alt_multi():
    rng = rng_for(22)
    Hs = [random_hermitian(3, rng) for _ in range(3)]
    a = alt_general(Hs, p=2, r=0.4)
    b = alt_multi([matrix_exp(H) for H in Hs], p=2, r=0.4)
    assert a.lhs_log == pytest.approx(b.lhs_log, abs=1e-10)
    assert a.rhs_log == pytest.approx(b.rhs_log, abs=1e-10)


def test_lie_trotter():
    rng = rng_for(23)
    Hs = commuting_hermitians(3, 3, rng)
    assert np.allclose(lie_trotter(Hs, 0.7), matrix_exp(sum(Hs)), atol=1e-10)
    L = ginibre(3, rng) * 0.5
    assert np.allclose(lie_trotter([L], 0.3), expm(L), atol=1e-10)
    H1, H2 = random_hermitian(3, rng), random_hermitian(3, rng)
    target = matrix_exp(H1 + H2)
    e2 = np.linalg.norm(lie_trotter([H1, H2], 1e-2) - target)
    e3 = np.linalg.norm(lie_trotter([H1, H2], 1e-3) - target)
    # The modulus |prod e^{rH}|^{1/r} is symmetric in its factors, so the
    # first-order commutator term cancels and the error decays like r^2.
    assert e3 < e2
    assert e3 / e2 == pytest.approx(0.01, rel=0.05)


def test_lieb_triple_examples():
    rng = rng_for(24)
    H1, H3 = random_hermitian(3, rng), random_hermitian(3, rng)
    ref = np.trace(matrix_exp(H1) @ matrix_exp(H3)).real
    assert lieb_triple_rhs(H1, np.zeros((3, 3)), H3) == pytest.approx(ref, rel=1e-12)
    assert our_gt3_rhs(H1, np.zeros((3, 3)), H3) == pytest.approx(ref, rel=1e-10)
    C = commuting_hermitians(3, 3, rng)
    ref = np.trace(matrix_exp(sum(C))).real
    assert lieb_triple_rhs(*C) == pytest.approx(ref, rel=1e-10)
    assert our_gt3_rhs(*C) == pytest.approx(ref, rel=1e-10)


def test_lieb_triple_against_numeric_resolvent_integral():
    rng = rng_for(25)
    H1, H2, H3 = (random_hermitian(2, rng) for _ in range(3))
    E1, E3, Em2 = matrix_exp(H1), matrix_exp(H3), matrix_exp(-H2)

    def f(s):
        R = np.linalg.inv(Em2 + s * np.eye(2))
        return np.trace(E1 @ R @ E3 @ R).real

    ref, _ = quad(f, 0, np.inf, epsabs=1e-13, epsrel=1e-12, limit=200)
    assert lieb_triple_rhs(H1, H2, H3) == pytest.approx(ref, rel=1e-9)


def test_triple_chain_n3():
    for i in range(5):
        rng = rng_for(26, i)
        H = [random_hermitian(3, rng) for _ in range(3)]
        rep = gt_multi([h / 2 for h in H], p=2)
        ours = our_gt3_rhs(*H)
        assert rep.lhs_log <= rep.rhs_log + 1e-9
        assert 2 * rep.rhs_log <= math.log(ours) + 1e-9


def test_peierls_bogoliubov():
    G1 = np.diag([0.2, -0.4])
    assert peierls_bogoliubov_check(G1, np.zeros((2, 2))) == pytest.approx(0.0, abs=1e-12)
    assert peierls_bogoliubov_check(np.diag([0.1, 0.7, -1.0]), np.diag([2.0, -1.0, 0.5])) >= 0
    for i in range(20):
        rng = rng_for(27, i)
        assert peierls_bogoliubov_check(random_hermitian(3, rng, 2), random_hermitian(3, rng, 2)) >= -1e-10


def test_counterexample_set1_corrected_matrix():
    w = hermitian_eig(EX_MAT1_A2_AS_PRINTED).eigenvalues
    assert w[0] < 0
    with pytest.raises(DomainError):
        kappa(COUNTEREXAMPLES[1][0], EX_MAT1_A2_AS_PRINTED, COUNTEREXAMPLES[1][2])
    for A in COUNTEREXAMPLES[1] + COUNTEREXAMPLES[2]:
        assert hermitian_eig(A).eigenvalues[0] > 0


def test_gamma_commuting_equals_kappa():
    A = [np.diag([1.0, 2.0]), np.diag([0.5, 3.0]), np.diag([2.0, 0.25])]
    g = gamma_curve(*A, np.linspace(-3, 3, 7))
    assert np.allclose(g, kappa(*A), rtol=1e-12)


def test_counterexample_properties():
    g0, k = gamma_kappa(*COUNTEREXAMPLES[1], 0.0)
    assert k - g0 > 0
    for which in (1, 2):
        A = COUNTEREXAMPLES[which]
        assert kappa(*A) <= gamma_average(*A) + 1e-8
        rows = counterexample_report(which, np.arange(-60, 61) * 0.05)
        g = np.array([r[1] for r in rows])
        assert np.any(g > rows[0][2]) and np.any(g < rows[0][2])


def test_kappa_independent_oracle():
    # kappa via scipy's general-purpose logm/expm instead of spectral calculus
    for which in (1, 2):
        A = COUNTEREXAMPLES[which]
        ref = np.trace(expm(sum(logm(a) for a in A))).real
        assert kappa(*A) == pytest.approx(ref, rel=1e-10)


def test_counterexample_rejects_unknown_set():
    with pytest.raises(ValueError):
        counterexample_report(3, [0.0])


FAMILIES = ["gt_classic", "alt_classic", "gt_general", "alt_general"]


@pytest.mark.parametrize("family", FAMILIES)
def test_campaign_200_instances(family):
    for i in range(200):
        rng = rng_for(100 + FAMILIES.index(family), i)
        n, d = 1 + i % 4, 1 + (i // 4) % 5
        p, r = (1, 2, 3)[i % 3], (0.1, 0.5, 0.9)[(i // 3) % 3]
        if family == "gt_classic":
            rep = gt_classic(random_hermitian(d, rng, 2), random_hermitian(d, rng, 2))
        elif family == "alt_classic":
            rep = alt_classic(random_psd(d, rng), random_psd(d, rng), q=p / 2, r=r)
        elif family == "gt_general":
            rep = gt_general([ginibre(d, rng) for _ in range(n)], p=p, quad=Q0)
        else:
            rep = alt_general([ginibre(d, rng) for _ in range(n)], p=p, r=r)
        assert rep.holds(1e-9), (family, i, rep)
