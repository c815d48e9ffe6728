import numpy as np
import pytest

from ovoxel.voxelize import (
    QefAccumulator,
    add_line_term,
    add_plane_term,
    add_point_term,
    solve_box_qef,
    solve_qef,
)


def grid_search_minimizer(acc, steps=101):
    """Brute-force minimizer of the quadratic over the voxel cube."""
    axis = np.linspace(0.0, 1.0, steps)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    vals = np.einsum("ij,jk,ik->i", pts, acc.A, pts) - 2.0 * pts @ acc.b + acc.c
    best = int(np.argmin(vals))
    return pts[best], float(vals[best])


def random_accumulator(rng, n_planes=None, n_lines=None):
    acc = QefAccumulator()
    n_planes = int(rng.integers(3, 9)) if n_planes is None else n_planes
    n_lines = int(rng.integers(0, 3)) if n_lines is None else n_lines
    for _ in range(n_planes):
        n = rng.normal(size=3)
        n /= np.linalg.norm(n)
        add_plane_term(acc, rng.random(3), n)
    for _ in range(n_lines):
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        add_line_term(acc, rng.random(3), d, 1.0)
    add_point_term(acc, acc.q_bar, 0.05)
    return acc


class TestPlaneTerm:
    def test_single_plane_outer_product(self):
        acc = add_plane_term(QefAccumulator(), [0.5, 0.5, 0.5], [1.0, 0.0, 0.0])
        assert np.allclose(acc.A, np.diag([1.0, 0.0, 0.0]))
        assert np.allclose(acc.b, [0.5, 0.0, 0.0])
        assert np.isclose(acc.c, 0.25)

    def test_linearity(self):
        a1 = add_plane_term(QefAccumulator(), [0.2, 0.3, 0.4], [0.0, 1.0, 0.0])
        a2 = QefAccumulator()
        add_plane_term(a2, [0.2, 0.3, 0.4], [0.0, 1.0, 0.0])
        add_plane_term(a2, [0.2, 0.3, 0.4], [0.0, 1.0, 0.0])
        assert np.allclose(a2.A, 2.0 * a1.A)
        assert np.allclose(a2.b, 2.0 * a1.b)
        assert np.isclose(a2.c, 2.0 * a1.c)

    def test_matches_direct_sum_of_squares(self, rng):
        qs = rng.random((5, 3))
        ns = rng.normal(size=(5, 3))
        ns /= np.linalg.norm(ns, axis=1, keepdims=True)
        acc = QefAccumulator()
        for q, n in zip(qs, ns):
            add_plane_term(acc, q, n)
        for v in rng.random((100, 3)):
            direct = float((((v - qs) * ns).sum(axis=1) ** 2).sum())
            assert np.isclose(acc.evaluate(v), direct, atol=1e-12)


class TestLineTerm:
    def test_z_line_through_origin(self):
        acc = add_line_term(QefAccumulator(), [0.0, 0.0, 0.0], [0.0, 0.0, 1.0], 1.0)
        assert np.allclose(acc.A, np.diag([1.0, 1.0, 0.0]))
        assert np.allclose(acc.b, 0.0)
        assert acc.evaluate([1.0, 0.0, 0.0]) == pytest.approx(1.0)

    def test_matches_point_line_distance(self, rng):
        o = rng.random(3)
        d = rng.normal(size=3)
        d /= np.linalg.norm(d)
        acc = add_line_term(QefAccumulator(), o, d, 1.0)
        for v in rng.random((100, 3)):
            r = (v - o) - ((v - o) @ d) * d
            assert np.isclose(acc.evaluate(v), float(r @ r), atol=1e-12)

    def test_lambda_scales(self, rng):
        o, d = rng.random(3), np.array([1.0, 0.0, 0.0])
        a1 = add_line_term(QefAccumulator(), o, d, 1.0)
        a3 = add_line_term(QefAccumulator(), o, d, 3.0)
        v = rng.random(3)
        assert np.isclose(a3.evaluate(v), 3.0 * a1.evaluate(v), atol=1e-12)


class TestPointTerm:
    def test_alone_minimizer_is_centroid(self, rng):
        q = rng.random(3)
        acc = QefAccumulator()
        acc.point_sum[:] = q
        acc.point_count = 1
        add_point_term(acc, q, 0.05)
        assert np.allclose(solve_qef(acc), q, atol=1e-12)
        assert acc.evaluate(q) == pytest.approx(0.0, abs=1e-15)

    def test_large_lambda_pulls_to_centroid(self, rng):
        # joint minimizer approaches q_bar monotonically as lambda_reg grows
        q_bar = np.array([0.3, 0.6, 0.4])
        dists = []
        for lam in (1e-2, 1.0, 1e2, 1e4):
            acc = QefAccumulator()
            add_plane_term(acc, [0.9, 0.9, 0.9], [1.0, 0.0, 0.0])
            add_plane_term(acc, [0.9, 0.1, 0.9], [0.0, 1.0, 0.0])
            acc.point_sum[:] = q_bar
            acc.point_count = 1
            add_point_term(acc, q_bar, lam)
            dists.append(np.linalg.norm(solve_qef(acc) - q_bar))
        assert all(b < a for a, b in zip(dists, dists[1:]))
        assert dists[-1] < 1e-3


class TestSolve:
    def test_point_on_plane(self):
        for lam in (0.01, 0.05, 1.0):
            acc = QefAccumulator()
            add_plane_term(acc, [0.5, 0.5, 0.5], [1.0, 0.0, 0.0])
            add_point_term(acc, [0.5, 0.5, 0.5], lam)
            assert np.allclose(solve_qef(acc), [0.5, 0.5, 0.5], atol=1e-9)

    def test_three_orthogonal_planes(self):
        acc = QefAccumulator()
        p = np.array([0.25, 0.25, 0.25])
        for axis in range(3):
            n = np.zeros(3)
            n[axis] = 1.0
            add_plane_term(acc, p, n)
        add_point_term(acc, p, 0.05)
        assert np.allclose(solve_qef(acc), p, atol=1e-9)

    def test_random_accumulators_match_grid_search(self, rng):
        step = 1.0 / 100
        for _ in range(50):
            acc = random_accumulator(rng)
            v = solve_qef(acc)
            v_ref, e_ref = grid_search_minimizer(acc)
            assert np.all((v >= 0.0) & (v <= 1.0))
            assert np.linalg.norm(v - v_ref) <= 2.0 * step * np.sqrt(3) + 1e-12
            assert acc.evaluate(v) <= e_ref + 1e-9

    def test_box_solver_beats_naive_clamp(self, rng):
        # craft a QEF whose unconstrained optimum is outside the cube and
        # whose clamped solution is suboptimal
        hit = 0
        for _ in range(200):
            acc = QefAccumulator()
            for _ in range(4):
                n = rng.normal(size=3)
                n /= np.linalg.norm(n)
                q = rng.random(3) * 2.0 - 0.5  # planes may pass outside
                add_plane_term(acc, q, n)
            add_point_term(acc, acc.q_bar, 0.05)
            unconstrained = np.linalg.solve(acc.A, acc.b)
            if np.all((unconstrained >= 0) & (unconstrained <= 1)):
                continue
            hit += 1
            v = solve_qef(acc)
            clamped = np.clip(unconstrained, 0.0, 1.0)
            assert acc.evaluate(v) <= acc.evaluate(clamped) + 1e-12
            _, e_ref = grid_search_minimizer(acc, steps=51)
            assert acc.evaluate(v) <= e_ref + 1e-9
        assert hit > 0

    def test_degenerate_accumulator_falls_back(self):
        acc = QefAccumulator()  # all-zero quadratic: singular solve
        assert np.allclose(solve_qef(acc), 0.5)

    def test_box_qef_interior_case(self):
        a = np.eye(3)
        b = np.array([0.5, 0.25, 0.75])
        assert np.allclose(solve_box_qef(a, b), b)
