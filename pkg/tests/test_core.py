"""Map geometry checks: parameter validation, branch formulas, derivative
oracles, the linear-flow transit against an ODE integrator, and the
wing-composition commuting diagram."""

import math

import numpy as np
import pytest
from scipy.integrate import solve_ivp

from rovella.core import (
    EigenTriple,
    FlowState,
    ParamError,
    PointQ,
    RovellaParams,
    SingularPointError,
    default_params,
    eval_F,
    eval_G,
    eval_T,
    eval_T_deriv,
    expansion_matrix,
    global_return,
    local_flow_map,
    return_time_local,
    rotation_matrix,
    schwarzian,
    truncated_distance,
    validate_params,
)

P = default_params()


def central_diff(f, x, order, h=1e-6):
    """Finite-difference oracle for derivatives up to order 3."""
    if order == 1:
        return (f(x + h) - f(x - h)) / (2 * h)
    if order == 2:
        return (f(x + h) - 2 * f(x) + f(x - h)) / h**2
    if order == 3:
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (
            2 * h**3
        )
    raise ValueError(order)


class TestParams:
    def test_default_instance_valid(self):
        assert P.r == 5.0
        assert P.s == pytest.approx(1.2)
        assert P.r > P.s + 3

    def test_r_s_plus_3_violated(self):
        eigen = EigenTriple(1.0, -3.0, -1.2)
        with pytest.raises(ParamError, match="r > s\\+3 violated"):
            validate_params(RovellaParams(eigen, 2.0**1.2, 0.25, -0.25))

    def test_rho_bound_violated(self):
        rho = 2.0**1.2 * 1.01
        with pytest.raises(ParamError, match=r"rho\*\(1/2\)\^s <= 1"):
            validate_params(RovellaParams(P.eigen, rho, 0.25, -0.25))

    def test_offset_containment_violated(self):
        with pytest.raises(ParamError, match=r"\|c0\|"):
            validate_params(RovellaParams(P.eigen, P.rho, 0.49, -0.25))

    def test_disjointness_violated(self):
        with pytest.raises(ParamError, match="not disjoint"):
            validate_params(RovellaParams(P.eigen, P.rho, 0.01, -0.01))

    def test_eigen_ordering_violated(self):
        with pytest.raises(ParamError, match="-lambda2 > -lambda3"):
            EigenTriple(1.0, -1.1, -1.2).validate()


class TestOneDimensionalMap:
    def test_right_limit_is_one_half(self):
        # T(0+) = 1/2, approached along a shrinking sequence
        for k in range(6, 40, 6):
            gap = P.rho * 2.0 ** (-1.2 * k)
            assert eval_T(P, 2.0**-k) == pytest.approx(0.5, abs=1.01 * gap)
            assert eval_T(P, 2.0**-k) < 0.5

    def test_full_map_boundary_values(self):
        # rho (1/2)^s = 1 makes T(1/2) = -1/2 (up to 1 ulp here)
        assert eval_T(P, 0.5) == pytest.approx(-0.5, abs=1e-15)
        assert eval_T(P, -0.5) == pytest.approx(0.5, abs=1e-15)

    def test_odd_symmetry(self):
        for x in [1e-8, 1e-3, 0.1, 0.25, 0.5]:
            assert eval_T(P, -x) == -eval_T(P, x)

    def test_singular_point_rejected(self):
        with pytest.raises(SingularPointError):
            eval_T(P, 0.0)
        with pytest.raises(SingularPointError):
            eval_T(P, 1e-305)

    def test_image_contained_on_dense_grid(self):
        xs = np.linspace(-0.5, 0.5, 20001)
        xs = xs[np.abs(xs) > 1e-9]
        img = np.array([eval_T(P, x) for x in xs])
        assert np.all(np.abs(img) <= 0.5 + 1e-12)

    def test_branches_strictly_monotone(self):
        xs = np.linspace(1e-6, 0.5, 2000)
        right = np.array([eval_T(P, x) for x in xs])
        assert np.all(np.diff(right) < 0)
        left = np.array([eval_T(P, -x) for x in xs[::-1]])
        assert np.all(np.diff(left) < 0)


class TestDerivatives:
    def test_derivative_negative_everywhere(self):
        for x in [0.01, -0.01, 0.3, -0.3, 0.5, -0.5]:
            assert eval_T_deriv(P, x, 1) < 0

    def test_closed_form_branch_formula(self):
        # T' = -rho s |x|^(s-1) on both branches
        for x in np.linspace(-0.5, 0.5, 41):
            if abs(x) < 1e-9:
                continue
            expected = -P.rho * P.s * abs(x) ** (P.s - 1.0)
            assert eval_T_deriv(P, x, 1) == pytest.approx(expected, rel=1e-14)

    @pytest.mark.parametrize("x", [0.3, -0.3, 0.45, -0.12])
    def test_first_derivative_vs_central_difference(self, x):
        fd = central_diff(lambda t: eval_T(P, t), x, 1)
        assert eval_T_deriv(P, x, 1) == pytest.approx(fd, rel=1e-6)

    @pytest.mark.parametrize("order,rel", [(2, 1e-3), (3, 2e-2)])
    def test_higher_orders_vs_central_difference(self, order, rel):
        for x in [0.3, -0.3]:
            fd = central_diff(lambda t: eval_T(P, t), x, order, h=1e-4)
            assert eval_T_deriv(P, x, order) == pytest.approx(fd, rel=rel)

    def test_singular_point_rejected(self):
        with pytest.raises(SingularPointError):
            eval_T_deriv(P, 0.0, 1)


class TestSchwarzian:
    def test_value_at_quarter(self):
        # s = 1.2: -(0.2 * 2.2) / (2 * 0.0625) = -3.52
        assert schwarzian(P, 0.25) == pytest.approx(-3.52, rel=1e-12)

    def test_matches_finite_difference_oracle(self):
        f = lambda t: eval_T(P, t)
        for x in [0.2, -0.2, 0.4]:
            d1 = central_diff(f, x, 1, h=1e-5)
            d2 = central_diff(f, x, 2, h=1e-4)
            d3 = central_diff(f, x, 3, h=1e-3)
            sw = d3 / d1 - 1.5 * (d2 / d1) ** 2
            assert schwarzian(P, x) == pytest.approx(sw, rel=1e-3)

    def test_negative_everywhere(self):
        for x in np.linspace(-0.5, 0.5, 101):
            if abs(x) < 1e-9:
                continue
            assert schwarzian(P, x) < 0

    def test_inverse_square_profile(self):
        vals = [schwarzian(P, x) * x * x for x in (0.03, 0.1, 0.22, 0.47)]
        assert np.ptp(vals) < 1e-12


class TestReturnMap:
    def test_right_limit_lands_at_c0(self):
        q = eval_F(P, PointQ(1e-40, 0.37))
        assert q.x == pytest.approx(0.5, abs=1e-40)
        assert q.y == pytest.approx(P.c0, abs=1e-100)

    def test_fiber_contraction_factor(self):
        # |G(x,y1) - G(x,y2)| = |y1-y2| |x|^r <= (1/2)^r |y1-y2|
        for x in [0.5, -0.5, 0.2, -0.07]:
            d = abs(eval_G(P, x, 0.5) - eval_G(P, x, -0.5))
            assert d == pytest.approx(abs(x) ** P.r, rel=1e-12)
            assert d <= 0.5**P.r + 1e-15

    def test_fiber_contraction_sup_on_grid(self):
        xs = np.linspace(-0.5, 0.5, 2002)
        sup = max(abs(x) ** P.r for x in xs)
        assert sup == pytest.approx(0.5**P.r, rel=1e-12)
        assert sup < 1.0

    def test_point_value_by_direct_substitution(self):
        q = eval_F(P, PointQ(0.25, 0.1))
        assert q.x == pytest.approx(-(2.0**1.2) * 0.25**1.2 + 0.5, rel=1e-15)
        assert q.y == pytest.approx(0.1 * 0.25**5 + 0.25, rel=1e-15)

    def test_image_inside_q(self):
        for x in np.linspace(-0.5, 0.5, 201):
            if abs(x) < 1e-9:
                continue
            for y in np.linspace(-0.5, 0.5, 21):
                q = eval_F(P, PointQ(x, y))
                assert abs(q.x) <= 0.5 + 1e-12 and abs(q.y) <= 0.5


class TestLocalFlow:
    def test_boundary_of_chart(self):
        st = local_flow_map(P.eigen, 1.0, 0.33)
        assert (st.x, st.y, st.z, st.t) == (1.0, 0.33, 1.0, 0.0)

    def test_invariant_plane(self):
        assert local_flow_map(P.eigen, 0.2, 0.0).y == 0.0

    def test_against_ode_integration(self):
        # integrate the linear field from (1/2, 1/2, 1) until x = 1
        e = P.eigen
        rhs = lambda t, v: [e.lambda1 * v[0], e.lambda2 * v[1], e.lambda3 * v[2]]
        hit = lambda t, v: v[0] - 1.0
        hit.terminal, hit.direction = True, 1.0
        sol = solve_ivp(
            rhs, (0.0, 10.0), [0.5, 0.5, 1.0], events=hit,
            rtol=1e-12, atol=1e-14, dense_output=True,
        )
        exit_ode = sol.y_events[0][0]
        st = local_flow_map(e, 0.5, 0.5)
        assert st.y == pytest.approx(exit_ode[1], abs=1e-8)
        assert st.z == pytest.approx(exit_ode[2], abs=1e-8)
        assert st.y == pytest.approx(0.5**6, rel=1e-12)
        assert st.z == pytest.approx(0.5**1.2, rel=1e-12)
        assert st.t == pytest.approx(sol.t_events[0][0], abs=1e-8)

    def test_negative_branch_symmetry(self):
        st = local_flow_map(P.eigen, -0.3, 0.2)
        assert st.x == -1.0
        assert st.y == pytest.approx(0.2 * 0.3**5, rel=1e-12)
        assert st.z == pytest.approx(0.3**1.2, rel=1e-12)

    def test_epsilon_scaled_sections(self):
        # appendix form (eps, eps^-r y x^r, eps^(1-s) x^s)
        eps, x, y = 0.25, 0.1, 0.2
        st = local_flow_map(P.eigen, x, y, epsilon=eps)
        assert st.x == eps
        assert st.y == pytest.approx(eps ** (-5.0) * y * x**5, rel=1e-12)
        assert st.z == pytest.approx(eps ** (1 - 1.2) * x**1.2, rel=1e-12)

    def test_stable_manifold_error(self):
        with pytest.raises(SingularPointError):
            local_flow_map(P.eigen, 0.0, 0.1)


class TestReturnTime:
    def test_boundary_zero(self):
        assert return_time_local(P.eigen, 1.0) == 0.0
        assert return_time_local(P.eigen, 0.25, epsilon=0.25) == 0.0

    def test_log_two_at_one_half(self):
        assert return_time_local(P.eigen, 0.5) == pytest.approx(math.log(2))

    def test_halving_adds_log_two(self):
        for x in [0.4, 0.1, 0.003]:
            gap = return_time_local(P.eigen, x / 2) - return_time_local(P.eigen, x)
            assert gap == pytest.approx(math.log(2) / P.eigen.lambda1, rel=1e-12)

    def test_monotone_decreasing_in_abs_x(self):
        xs = np.linspace(1e-6, 1.0, 500)
        ts = [return_time_local(P.eigen, x) for x in xs]
        assert np.all(np.diff(ts) < 0)

    def test_infinite_time_error(self):
        with pytest.raises(SingularPointError):
            return_time_local(P.eigen, 0.0)


class TestGlobalReturn:
    def test_rotation_plus_sends_z_axis_to_x_direction(self):
        m = rotation_matrix(1)
        img = tuple(sum(m[i][j] * v for j, v in enumerate((0.0, 0.0, 1.0))) for i in range(3))
        assert img == (1.0, 0.0, 0.0)

    def test_expansion_is_diagonal(self):
        m = expansion_matrix(P.rho)
        assert m[0][0] == P.rho
        assert m[1][1] == 1.0 and m[2][2] == 1.0
        assert m[0][1] == m[0][2] == m[1][0] == 0.0

    def test_commuting_diagram_on_grid(self):
        # global_return(local_flow_map(q)) == eval_F(q) away from x = 0
        xs = np.linspace(-0.5, 0.5, 100)
        ys = np.linspace(-0.5, 0.5, 100)
        worst = 0.0
        for x in xs:
            if abs(x) < 1e-12:
                continue
            for y in ys:
                via_flow = global_return(P, local_flow_map(P.eigen, x, y))
                direct = eval_F(P, PointQ(x, y))
                worst = max(worst, abs(via_flow.x - direct.x), abs(via_flow.y - direct.y))
        assert worst <= 1e-12

    def test_rejects_points_off_side_sections(self):
        with pytest.raises(ParamError):
            global_return(P, FlowState(0.5, 0.0, 0.5, 0.0))


class TestDomainTypes:
    def test_point_must_lie_in_square(self):
        with pytest.raises(ParamError, match="outside Q"):
            PointQ(0.6, 0.0)
        with pytest.raises(ParamError, match="outside Q"):
            PointQ(0.0, -0.51)

    def test_flow_state_must_lie_in_cube(self):
        with pytest.raises(ParamError, match="outside the cube"):
            FlowState(1.5, 0.0, 0.0, 0.0)
        with pytest.raises(ParamError, match="negative elapsed"):
            FlowState(0.5, 0.0, 0.5, -1.0)


class TestTruncatedDistance:
    def test_boundary_uses_leq(self):
        assert truncated_distance(0.2, 0.0, 0.2) == 0.2

    def test_zero_at_equal_points(self):
        assert truncated_distance(0.1, 0.37, 0.37) == 0.0

    def test_capped_to_one(self):
        assert truncated_distance(0.1, 0.0, 0.5) == 1.0

    def test_delta_positive_required(self):
        with pytest.raises(ValueError):
            truncated_distance(0.0, 0.1, 0.2)
