import math

import numpy as np
import pytest
import sympy as sp

from bsquant.acs import (OmegaMap, check_bs_commutativity, jordan_omega, kodaira_thurston_omega, omega_catalog,
                         scale_adiabatic, twisted_torus_omega)
from bsquant.group_actions import flat_torus, jordan_block, kodaira_thurston, twisted_torus
from bsquant.prequantum import BSPoint, PrequantumLift, bs_points, orbit_index
from bsquant.theta import (ApproxThetaSection, CommutativityError, ConvergenceError, EquivariantSection,
                           FourierSection, ThetaSection, TransportedMode, approx_coefficient, base_section_eval,
                           closed_form_theta, coefficient, dirac_apply, dirac_field, exponent_poly, g_path,
                           mode_dirac_polys, theta_eval)

EYE2 = np.eye(2, dtype=int)
TWIST_U = [[[1, 0], [0, 1]], [[0, 1], [1, 1]]]
IDENTITY1 = OmegaMap.constant([["i"]])
IDENTITY2 = omega_catalog("identity", {"n": 2})
RATIONAL2 = OmegaMap.constant([["1+1i", "1/4"], ["1/4", "2i"]])


def seeded(n, count, seed=5, lo=0.0, hi=1.0):
    rng = np.random.default_rng(seed)
    return rng.uniform(lo, hi, (count, n)), rng.uniform(0, 1, (count, n))


# coefficients --------------------------------------------------------------------

def test_g_path_examples():
    assert g_path(IDENTITY1, (0,), 1, 1, [1.0]) == pytest.approx(-0.5j)
    assert g_path(IDENTITY1, (1,), 2, 1, [0.5]) == pytest.approx(0.0)
    for x2 in (0.3, -1.2):
        assert g_path(kodaira_thurston_omega(), (0, 0), 2, 2, [0.7, x2]) == pytest.approx(-1j * x2 ** 2)


def _sympy_exponent(entries, m, N):
    n = len(m)
    xs = sp.symbols(f"x1:{n + 1}")
    Om = sp.Matrix(entries(xs))
    v = sp.Matrix([m[k] - N * xs[k] for k in range(n)])
    total = 0
    for i in range(n):
        expr = (Om * v)[i]
        frozen = {xs[k]: sp.Rational(m[k], N) for k in range(i)}
        tau = sp.Symbol("tau")
        expr = expr.subs(frozen).subs(xs[i], tau)
        total += sp.integrate(expr, (tau, sp.Rational(m[i], N), xs[i]))
    return xs, sp.expand(total)


def test_exponent_matches_symbolic_integration():
    def twisted(xs):
        x1, x2 = xs
        return [[x1 + sp.I, x2], [x2, x1 + x2 + sp.I]]

    omega = twisted_torus_omega(EYE2, TWIST_U)
    for m, N in [((0, 0), 1), ((1, 1), 2), ((2, 1), 3)]:
        xs, Q = _sympy_exponent(twisted, m, N)
        f = sp.lambdify(xs, Q, "numpy")
        pts = np.random.default_rng(1).uniform(-1, 1, (20, 2))
        ours = exponent_poly(omega, m, N)(pts)
        assert np.allclose(ours, f(pts[:, 0], pts[:, 1]), atol=1e-12)


def test_coefficient_closed_forms():
    x = np.linspace(-1, 1, 7)[:, None]
    for N in (1, 2):
        a = coefficient(IDENTITY1, (1,), N)
        assert np.allclose(a(x), np.exp(-math.pi * N * (x[:, 0] - 1 / N) ** 2))
    W = RATIONAL2(np.zeros(2))
    a = coefficient(RATIONAL2, (1, 0), 2)
    pts = np.random.default_rng(2).uniform(-1, 1, (10, 2))
    d = pts - np.array([0.5, 0.0])
    assert np.allclose(a(pts), np.exp(1j * math.pi * 2 * np.einsum("ki,ij,kj->k", d, W, d)))


def test_coefficient_normalization_and_kernel():
    omega = twisted_torus_omega(EYE2, TWIST_U)
    for m in [(0, 0), (1, 2), (-1, 3)]:
        a = coefficient(omega, m, 2)
        assert a(np.array(m) / 2) == pytest.approx(1.0)
        assert a.is_kernel()
        assert all(p.is_zero() for p in a.residual_polys())


def test_coefficient_rejects_non_commuting_omega():
    with pytest.raises(CommutativityError):
        coefficient(kodaira_thurston_omega(), (0, 0), 2)
    with pytest.raises(CommutativityError):
        coefficient(jordan_omega(1), (0, 0), 1)


@pytest.mark.parametrize("omega", [twisted_torus_omega(EYE2, TWIST_U), jordan_omega(0), RATIONAL2,
                                   twisted_torus_omega(np.eye(3, dtype=int),
                                                       [[[1, 0, 0], [0, 1, 0], [0, 0, 1]],
                                                        [[0, 1, 0], [1, 0, 1], [0, 1, 1]],
                                                        [[0, 0, 1], [0, 1, 1], [1, 1, 0]]])])
def test_exponent_is_independent_of_path_order(omega):
    import itertools

    rng = np.random.default_rng(11)
    n = omega.n
    for _ in range(100 // math.factorial(n) + 1):
        m = tuple(int(v) for v in rng.integers(-3, 4, n))
        N = int(rng.integers(1, 4))
        assert check_bs_commutativity(omega, m, N)
        ref = exponent_poly(omega, m, N)
        assert abs(ref(np.array(m, float) / N)) < 1e-14
        for order in itertools.permutations(range(n)):
            assert (exponent_poly(omega, m, N, order) - ref).is_zero(1e-12)


def test_base_section_eval_examples():
    a = coefficient(IDENTITY1, (0,), 1)
    assert base_section_eval(a, np.array([0.0]), np.array([0.0])) == pytest.approx(1.0)
    assert base_section_eval(a, np.array([1.0]), np.array([0.5])) == pytest.approx(math.exp(-math.pi))
    a1 = coefficient(IDENTITY1, (1,), 1)
    assert base_section_eval(a1, np.array([0.0]), np.array([0.5])) == pytest.approx(-math.exp(-math.pi))
    exact_a = coefficient(RATIONAL2, (1, 1), 2)
    approx_a = approx_coefficient(RATIONAL2, (1, 1), 2)
    x, y = seeded(2, 10)
    assert np.allclose(base_section_eval(exact_a, x, y), base_section_eval(approx_a, x, y))


# theta sections -----------------------------------------------------------------------

def test_theta_unit_value():
    s = ThetaSection(PrequantumLift(flat_torus([[1]]), 1), (0,), IDENTITY1, eps=1e-12)
    ref = sum(math.exp(-math.pi * k * k) for k in range(-30, 31))
    assert abs(theta_eval(s, np.array([[0.0]]), np.array([[0.0]]))[0] - ref) < 1e-12
    assert abs(ref - 1.086434811213) < 1e-12


def test_single_term_dominance_for_large_t():
    lift = PrequantumLift(flat_torus(EYE2), 2)
    for t in (8, 32):
        s = ThetaSection(lift, (1, 0), scale_adiabatic(IDENTITY2, t))
        v = s.evaluate(np.array([[0.5, 0.0]]), np.zeros((1, 2)))[0]
        assert abs(v - 1) < 5 * math.exp(-math.pi * 2 * t / 4)


def test_truncation_error_within_tail_bound():
    lift = PrequantumLift(twisted_torus(EYE2, TWIST_U), 2)
    coarse = ThetaSection(lift, (1, 0), twisted_torus_omega(EYE2, TWIST_U), eps=1e-5)
    fine = ThetaSection(lift, (1, 0), twisted_torus_omega(EYE2, TWIST_U), eps=1e-14)
    x, y = seeded(2, 40)
    assert np.max(np.abs(coarse.evaluate(x, y) - fine.evaluate(x, y))) <= coarse.tail_bound + fine.tail_bound
    assert coarse.certified and coarse.trunc_radius < fine.trunc_radius


def test_divergent_configuration_is_refused():
    with pytest.raises(ConvergenceError):
        ThetaSection(PrequantumLift(flat_torus([[1]]), 1), (0,), OmegaMap.constant([["-1i"]]))
    with pytest.raises(ValueError):
        ThetaSection(PrequantumLift(flat_torus([[1]]), 2), (2,), IDENTITY1)


def test_kt_approximation_matches_closed_form_at_origin():
    lift = PrequantumLift(kodaira_thurston(), 2)
    for m in [(0, 0), (0, 1), (1, 1)]:
        s = ApproxThetaSection(lift, m, kodaira_thurston_omega(), eps=1e-13)
        ref = closed_form_theta("kodaira_thurston", m, 2, t=1)
        assert abs(s.evaluate(np.zeros((1, 2)), np.zeros((1, 2)))[0] - ref(np.zeros((1, 2)), np.zeros((1, 2)))[0]) < 1e-12


@pytest.mark.parametrize("m", [(0, 0), (1, 0), (1, 1)])
@pytest.mark.parametrize("t", [1, 3])
def test_kt_closed_form_cross_evaluation(m, t):
    lift = PrequantumLift(kodaira_thurston(), 2)
    s = ApproxThetaSection(lift, m, scale_adiabatic(kodaira_thurston_omega(), t), eps=1e-13)
    x, y = seeded(2, 20, seed=8)
    assert np.max(np.abs(s.evaluate(x, y) - closed_form_theta("kodaira_thurston", m, 2, t=t)(x, y))) < 1e-10


def test_kt_published_form_only_agrees_on_the_zero_section():
    x, y = seeded(2, 20, seed=8)
    fixed = closed_form_theta("kodaira_thurston", (1, 1), 2)
    printed = closed_form_theta("kodaira_thurston", (1, 1), 2, as_printed=True)
    assert np.max(np.abs(fixed(x, y) - printed(x, y))) > 1e-2
    x0 = np.zeros((5, 2))
    assert np.max(np.abs(fixed(x0, y[:5]) - printed(x0, y[:5]))) < 1e-12


@pytest.mark.parametrize("lam", [0, 1, 2])
def test_jordan_closed_form_cross_evaluation(lam):
    lift = PrequantumLift(jordan_block([lam]), 2)
    s = ApproxThetaSection(lift, (1, 1), jordan_omega(lam), eps=1e-13)
    x, y = seeded(2, 20, seed=4)
    ref = closed_form_theta("jordan", (1, 1), 2, params={"lambda": lam})
    assert np.max(np.abs(s.evaluate(x, y) - ref(x, y))) < 1e-10


def test_jordan_zero_is_ex48_specialization():
    # at lambda = 0 the exact theta exists and coincides with the twisted torus one
    u = [[[0, 0], [0, 0]], [[0, 0], [0, 1]]]
    x, y = seeded(2, 20, seed=6)
    a = ThetaSection(PrequantumLift(jordan_block([0]), 2), (0, 1), jordan_omega(0), eps=1e-13)(x, y)
    b = closed_form_theta("ex48", (0, 1), 2, params={"C": EYE2.tolist(), "u": u})(x, y)
    assert np.max(np.abs(a - b)) < 1e-10


def test_ex48_without_twist_is_constant_theta():
    zero_u = np.zeros((2, 2, 2), dtype=int).tolist()
    x, y = seeded(2, 20, seed=6)
    s = ThetaSection(PrequantumLift(flat_torus(EYE2), 2), (1, 0), IDENTITY2, eps=1e-13)
    ref = closed_form_theta("ex48", (1, 0), 2, params={"C": EYE2.tolist(), "u": zero_u})
    assert np.max(np.abs(s.evaluate(x, y) - ref(x, y))) < 1e-10


def test_ex48_twisted_closed_form_cross_evaluation():
    lift = PrequantumLift(twisted_torus(EYE2, TWIST_U), 2)
    x, y = seeded(2, 20, seed=9)
    for m in [(0, 0), (1, 1)]:
        s = ThetaSection(lift, m, twisted_torus_omega(EYE2, TWIST_U), eps=1e-13)
        ref = closed_form_theta("ex48", m, 2, params={"C": EYE2.tolist(), "u": TWIST_U})
        assert np.max(np.abs(s.evaluate(x, y) - ref(x, y))) < 1e-10


def test_unknown_closed_form():
    with pytest.raises(KeyError):
        closed_form_theta("nope", (0,), 1)


# Dirac operator -----------------------------------------------------------------------

def test_exact_coefficient_is_in_the_kernel_numerically():
    omega = twisted_torus_omega(EYE2, TWIST_U)
    a = coefficient(omega, (1, 1), 2)
    section = FourierSection(2, {(1, 1): a})
    x, _ = seeded(2, 30, lo=-1, hi=2)
    assert np.max(np.abs(dirac_apply(section, omega, 2, x)[(1, 1)])) < 1e-10
    assert all(p.is_zero() for p in mode_dirac_polys(a, omega, 2))


def test_approx_residual_matches_the_frozen_formula():
    lift = PrequantumLift(kodaira_thurston(), 2)
    for t in (1, 4):
        omega = scale_adiabatic(kodaira_thurston_omega(), t)
        a = approx_coefficient(omega, (0, 1), 2)
        x, _ = seeded(2, 30, lo=-1, hi=2)
        got = dirac_apply(FourierSection(2, {(0, 1): a}), omega, 2, x)[(0, 1)]
        assert np.max(np.abs(got)) > 1e-3
        assert np.max(np.abs(got - a.residual_vector(x))) < 1e-10
    assert lift.liftable


def test_zero_section_has_zero_image():
    x, y = seeded(2, 5)
    assert dirac_apply(FourierSection(2), IDENTITY2, 1, x) == {}
    assert np.all(dirac_field(FourierSection(2), IDENTITY2, 1, x, y) == 0)


def test_numeric_gradient_fallback_for_plain_callables():
    a = coefficient(IDENTITY1, (0,), 1)
    section = FourierSection(1, {(0,): lambda x: a(x)})
    x = np.linspace(-1, 1, 9)[:, None]
    assert np.max(np.abs(dirac_apply(section, IDENTITY1, 1, x)[(0,)])) < 1e-8


INTEGRABLE = [
    ("flat", PrequantumLift(flat_torus(EYE2), 2), IDENTITY2),
    ("flat_rational", PrequantumLift(flat_torus(EYE2), 2), RATIONAL2),
    ("twisted", PrequantumLift(twisted_torus(EYE2, TWIST_U), 2), twisted_torus_omega(EYE2, TWIST_U)),
    ("jordan0", PrequantumLift(jordan_block([0]), 2), jordan_omega(0)),
]


@pytest.mark.parametrize("name,lift,omega", INTEGRABLE, ids=[c[0] for c in INTEGRABLE])
def test_theta_is_in_the_dirac_kernel_at_every_bs_point(name, lift, omega):
    eps = 1e-10
    x, y = seeded(2, 50, seed=21)
    for bs in bs_points(lift.family, lift.N):
        s = ThetaSection(lift, bs, omega, eps=eps)
        field = dirac_field(s.fourier(x), omega, lift.N, x, y)
        assert np.max(np.abs(field)) < 10 * eps


EQUIVARIANT = INTEGRABLE + [("kt_approx", PrequantumLift(kodaira_thurston(), 2), kodaira_thurston_omega()),
                            ("jordan2_approx", PrequantumLift(jordan_block([2]), 2), jordan_omega(2))]


@pytest.mark.parametrize("name,lift,omega", EQUIVARIANT, ids=[c[0] for c in EQUIVARIANT])
def test_theta_equivariance(name, lift, omega):
    fam = lift.family
    approx = name.endswith("approx")
    s = ThetaSection(lift, (1, 1), omega, eps=1e-12, approximate=approx)
    rng = np.random.default_rng(17)
    gs = [tuple(int(v) for v in g) for g in rng.integers(-2, 3, (50, 2))]
    x, y = rng.uniform(0, 1, (50, 2)), rng.uniform(0, 1, (50, 2))
    values = s(x, y)
    lhs = np.array([lift.apply(g, x[k], y[k], values[k])[2] for k, g in enumerate(gs)])
    moved = [fam.act_total(g, x[k], y[k]) for k, g in enumerate(gs)]
    rhs = s(np.array([m[0] for m in moved]), np.array([m[1] for m in moved]))
    assert np.max(np.abs(lhs - rhs)) < 2 * s.tail_bound + 1e-13


def test_direct_and_fourier_evaluation_agree():
    lift = PrequantumLift(jordan_block([2]), 2)
    s = ApproxThetaSection(lift, (0, 1), jordan_omega(2), eps=1e-12)
    x, y = seeded(2, 10)
    assert np.max(np.abs(s.direct_evaluate(x, y) - s.evaluate(x, y))) < 1e-11


def test_mode_supports_are_disjoint_between_bs_points():
    for lift in [INTEGRABLE[2][1], PrequantumLift(jordan_block([2]), 2), PrequantumLift(kodaira_thurston(), 4)]:
        fam, N = lift.family, lift.N
        owner = {}
        gammas = [(a, b) for a in range(-4, 5) for b in range(-4, 5)]
        for bs in bs_points(fam, N):
            for g in gammas:
                l = tuple(int(v) for v in orbit_index(fam, g, bs))
                assert owner.setdefault(l, bs.m) == bs.m


@pytest.mark.parametrize("name,lift,omega", INTEGRABLE[2:], ids=[c[0] for c in INTEGRABLE[2:]])
def test_transported_coefficients_solve_the_transported_equation(name, lift, omega):
    a = coefficient(omega, (1, 0), lift.N)
    rng = np.random.default_rng(3)
    for _ in range(10):
        g = tuple(int(v) for v in rng.integers(-3, 4, 2))
        mode = TransportedMode(lift, g, (1, 0), a)
        assert all(p.is_zero(1e-12) for p in mode_dirac_polys(mode, omega, lift.N))
        x = rng.uniform(-3, 3, (20, 2))
        res = dirac_apply(FourierSection(2, {mode.l: mode}), omega, lift.N, x)[mode.l]
        assert np.max(np.abs(res)) < 1e-10


def test_from_mode_rebuilds_the_same_section():
    lift = INTEGRABLE[2][1]
    omega = INTEGRABLE[2][2]
    s = ThetaSection(lift, (1, 0), omega, eps=1e-12)
    g = (1, -2)
    mode = TransportedMode(lift, g, (1, 0), s.coefficient)
    rebuilt = EquivariantSection.from_mode(lift, mode.l, mode, s.radius)
    x, y = seeded(2, 10)
    assert np.max(np.abs(rebuilt(x, y) - s(x, y))) < 1e-11


def test_bs_point_object_accepted():
    lift = PrequantumLift(flat_torus(EYE2), 2)
    a = ThetaSection(lift, BSPoint((1, 0), 2), IDENTITY2)
    b = ThetaSection(lift, (1, 0), IDENTITY2)
    x, y = seeded(2, 3)
    assert np.allclose(a(x, y), b(x, y))
    with pytest.raises(ValueError):
        ThetaSection(lift, BSPoint((1, 0), 3), IDENTITY2)
