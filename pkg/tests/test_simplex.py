import numpy as np
import pytest

from powergames.errors import SolverStallError
from powergames.simplex import SimplexOptions, dump_problem, make_problem, solve_lp
from oracles import lp_vertex_reference, random_bounded_lp


def solve(objective, ineq=(), eq=(), bounds=None, options=None):
    return solve_lp(make_problem(objective, ineq, eq, bounds), options)


class TestBasics:
    def test_simple_face_optimum(self):
        # max x1 + x2 s.t. x1 + x2 <= 1, x >= 0
        sol = solve([1.0, 1.0], ineq=[([-1.0, -1.0], -1.0)])
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)
        assert sol.x.sum() == pytest.approx(1.0, abs=1e-9)

    def test_infeasible(self):
        # x >= 2 and x <= 1
        sol = solve([1.0], ineq=[([1.0], 2.0), ([-1.0], -1.0)])
        assert sol.status == "infeasible"
        assert sol.x is None and sol.objective_value is None

    def test_unbounded(self):
        sol = solve([1.0], ineq=[([1.0], 0.0)])
        assert sol.status == "unbounded"

    def test_equality_row(self):
        # max x1 s.t. x1 + x2 = 1
        sol = solve([1.0, 0.0], eq=[([1.0, 1.0], 1.0)])
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(1.0, abs=1e-9)

    def test_bounds_only(self):
        sol = solve([-1.0, 2.0], bounds=[(0.5, 2.0), (-1.0, 3.0)])
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(0.5, abs=1e-9)
        assert sol.x[1] == pytest.approx(3.0, abs=1e-9)

    def test_free_variable(self):
        # max -|ish| via free var pushed negative: max -x, x free, x >= -3 as a row
        sol = solve([-1.0], ineq=[([1.0], -3.0)], bounds=[(None, None)])
        assert sol.status == "optimal"
        assert sol.x[0] == pytest.approx(-3.0, abs=1e-9)

    def test_validation(self):
        with pytest.raises(ValueError):
            make_problem([1.0, np.inf])
        with pytest.raises(ValueError):
            make_problem([1.0], ineq_rows=[([1.0, 2.0], 0.0)])
        with pytest.raises(ValueError):
            make_problem([1.0], bounds=[(2.0, 1.0)])


class TestAgainstVertexEnumeration:
    def test_battery(self):
        rng = np.random.default_rng(42)
        for k in range(60):
            c, a, b, eq, eb, lo, hi = random_bounded_lp(rng)
            prob = make_problem(
                c,
                ineq_rows=[(a[r], b[r]) for r in range(a.shape[0])],
                eq_rows=[(eq[r], eb[r]) for r in range(eq.shape[0])],
                bounds=list(zip(lo, hi)),
            )
            sol = solve_lp(prob)
            status, value = lp_vertex_reference(c, a, b, eq, eb, lo, hi)
            assert sol.status == status, f"case {k}"
            if status == "optimal":
                assert sol.objective_value == pytest.approx(value, abs=1e-8), f"case {k}"

    def test_feasibility_certificate(self):
        rng = np.random.default_rng(7)
        for _ in range(20):
            c, a, b, eq, eb, lo, hi = random_bounded_lp(rng)
            sol = solve_lp(make_problem(
                c,
                ineq_rows=[(a[r], b[r]) for r in range(a.shape[0])],
                eq_rows=[(eq[r], eb[r]) for r in range(eq.shape[0])],
                bounds=list(zip(lo, hi)),
            ))
            if sol.status != "optimal":
                continue
            x = sol.x
            scale = np.maximum(1.0, np.abs(a).max(axis=1))
            assert ((a @ x - b) / scale >= -1e-9).all()
            if eq.shape[0]:
                assert (np.abs(eq @ x - eb) <= 1e-9 * np.maximum(1.0, np.abs(eb))).all()
            assert (x >= lo - 1e-9).all() and (x <= hi + 1e-9).all()
            assert sol.objective_value == pytest.approx(float(c @ x), rel=1e-9, abs=1e-12)


class TestDegeneracy:
    def test_beale_cycling_instance(self):
        # classic degenerate LP that cycles under naive Dantzig pivoting
        c = [0.75, -150.0, 0.02, -6.0]
        rows = [
            ([-0.25, 60.0, 1.0 / 25.0, -9.0], 0.0),
            ([-0.5, 90.0, 1.0 / 50.0, -3.0], 0.0),
            ([0.0, 0.0, -1.0, 0.0], -1.0),
        ]
        sol = solve(c, ineq=rows)
        assert sol.status == "optimal"
        assert sol.objective_value == pytest.approx(0.05, abs=1e-9)

    def test_highly_degenerate_cone(self):
        # many tight rows at the origin plus a simplex equality
        rng = np.random.default_rng(1)
        n = 30
        a = rng.normal(size=(200, n))
        rows = [(a[r], 0.0) for r in range(200) if a[r].max() > 0]
        eq = [(np.ones(n), 1.0)]
        sol = solve(rng.uniform(0.0, 1.0, n), ineq=rows, eq=eq)
        # feasibility of the cone-simplex intersection is not guaranteed here;
        # accept either verdict but require a clean certificate when optimal
        assert sol.status in ("optimal", "infeasible")
        if sol.status == "optimal":
            coeffs = np.array([r[0] for r in rows])
            assert (coeffs @ sol.x >= -1e-8).all()
            assert sol.x.sum() == pytest.approx(1.0, abs=1e-9)


class TestDeterminism:
    def test_identical_runs(self):
        rng = np.random.default_rng(17)
        c, a, b, eq, eb, lo, hi = random_bounded_lp(rng)
        prob = make_problem(
            c,
            ineq_rows=[(a[r], b[r]) for r in range(a.shape[0])],
            eq_rows=[(eq[r], eb[r]) for r in range(eq.shape[0])],
            bounds=list(zip(lo, hi)),
        )
        s1 = solve_lp(prob)
        s2 = solve_lp(prob)
        assert s1.status == s2.status
        assert s1.iterations == s2.iterations
        if s1.status == "optimal":
            assert (s1.x == s2.x).all()
            assert s1.objective_value == s2.objective_value


class TestStall:
    def test_iteration_cap_raises(self):
        rng = np.random.default_rng(2)
        n = 10
        a = rng.normal(size=(40, n))
        x0 = rng.uniform(0.2, 1.0, n)
        b = a @ x0 - rng.uniform(0.1, 1.0, 40)
        opts = SimplexOptions(max_iter=1)
        with pytest.raises(SolverStallError):
            solve(rng.normal(size=n), ineq=[(a[r], b[r]) for r in range(40)],
                  bounds=[(0.0, 2.0)] * n, options=opts)


class TestDump:
    def test_fixed_layout(self):
        prob = make_problem(
            [1.0, -0.25],
            ineq_rows=[([2.0, 0.0], 1.0)],
            eq_rows=[([1.0, 1.0], 1.0)],
            bounds=[(0.0, 1.0), (None, None)],
            name="demo",
        )
        expected = (
            "NAME    demo\n"
            "* OBJSENSE MAX\n"
            "ROWS\n"
            " N  OBJ\n"
            " G  R0000001\n"
            " E  E0000001\n"
            "COLUMNS\n"
            "    X0000001  OBJ       +1.00000000000000000e+00\n"
            "    X0000001  R0000001  +2.00000000000000000e+00\n"
            "    X0000001  E0000001  +1.00000000000000000e+00\n"
            "    X0000002  OBJ       -2.50000000000000000e-01\n"
            "    X0000002  E0000001  +1.00000000000000000e+00\n"
            "RHS\n"
            "    RHS       R0000001  +1.00000000000000000e+00\n"
            "    RHS       E0000001  +1.00000000000000000e+00\n"
            "BOUNDS\n"
            " UP BND       X0000001  +1.00000000000000000e+00\n"
            " FR BND       X0000002\n"
            "ENDATA\n"
        )
        assert dump_problem(prob) == expected
