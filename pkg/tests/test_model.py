import numpy as np
import pytest

from aroml.errors import InputError, ModelInfeasibleError
from aroml.model import (AffineMap, AroProblem, Polyhedron, build_det,
                         det_value, load_instance, sample_ball,
                         sample_polyhedron, save_instance)
from aroml.lp import OPTIMAL, solve_lp
from oracles import enumerate_vertices


def tiny_problem():
    """1 facility site, 1 customer, demand d in [1, 2].

    x opens the site (capacity 3), y ships; unmet demand impossible here.
    min 2x + max_d min_y 1*y  s.t.  y >= d, y <= 3x, y >= 0.
    """
    m = 3
    A = AffineMap(const=np.array([[0.0], [-3.0], [0.0]]))
    B = AffineMap(const=np.array([[-1.0], [1.0], [-1.0]]))
    g = AffineMap(const=np.zeros(m),
                  d_coef=np.array([[-1.0], [0.0], [0.0]]))
    prob = AroProblem(n_x=1, n_y=1, n_d=1, n_theta=1,
                      c_map=AffineMap(const=np.array([2.0]),
                                      th_coef=np.array([[1.0]])),
                      b_map=AffineMap(const=np.array([1.0])),
                      A_map=A, B_map=B, g_map=g)
    unc = Polyhedron(H=np.zeros((0, 1)), h=np.zeros(0),
                     lo=np.array([1.0]), hi=np.array([2.0]))
    return prob, unc


def test_affine_map_eval():
    m = AffineMap(const=np.array([1.0, 2.0]),
                  d_coef=np.array([[1.0, 0.0], [0.0, 2.0]]),
                  th_coef=np.array([[1.0], [0.0]]))
    out = m(d=[3.0, 4.0], theta=[10.0])
    assert out == pytest.approx([14.0, 10.0])
    with pytest.raises(InputError):
        m(theta=[1.0])  # missing d


def test_fixed_recourse_enforced():
    prob, _ = tiny_problem()
    bad_b = AffineMap(const=np.array([1.0]), d_coef=np.array([[1.0]]))
    with pytest.raises(InputError):
        AroProblem(n_x=1, n_y=1, n_d=1, n_theta=1, c_map=prob.c_map,
                   b_map=bad_b, A_map=prob.A_map, B_map=prob.B_map,
                   g_map=prob.g_map)


def test_det_value_matches_hand_solution():
    prob, _ = tiny_problem()
    theta = np.array([0.5])
    # x=1: cost (2 + 0.5) + y where y = d
    assert det_value(prob, theta, np.array([1.0]), np.array([1.5])) == \
        pytest.approx(2.5 + 1.5, abs=1e-8)
    # x=0: y >= d > 0 but y <= 0 -> infeasible
    assert det_value(prob, theta, np.array([0.0]), np.array([1.5])) == np.inf


def test_build_det_row_order_is_canonical():
    prob, _ = tiny_problem()
    lp1 = build_det(prob, np.array([0.5]), np.array([1.0]), np.array([1.0]))
    lp2 = build_det(prob, np.array([0.9]), np.array([1.0]), np.array([2.0]))
    assert lp1.n_rows == lp2.n_rows == prob.m
    assert np.array_equal(lp1.A, lp2.A)  # B is theta-free here


def test_polyhedron_certification():
    with pytest.raises(ModelInfeasibleError):
        Polyhedron(H=np.array([[1.0], [-1.0]]), h=np.array([0.0, -1.0]),
                   lo=np.array([-10.0]), hi=np.array([10.0]))
    with pytest.raises(InputError):
        Polyhedron(H=np.zeros((0, 1)), h=np.zeros(0),
                   lo=np.array([0.0]), hi=np.array([np.inf]))


def test_contains_and_center():
    D = Polyhedron(H=np.array([[1.0, 1.0]]), h=np.array([3.0]),
                   lo=np.zeros(2), hi=np.full(2, 2.0))
    assert D.contains([1.0, 1.0])
    assert not D.contains([2.0, 2.0])
    c = D.max_slack_center()
    assert D.contains(c)
    assert np.all(D.H @ c < D.h - 0.1)


def test_is_vertex():
    D = Polyhedron(H=np.array([[1.0, 1.0]]), h=np.array([3.0]),
                   lo=np.zeros(2), hi=np.full(2, 2.0))
    assert D.is_vertex([2.0, 1.0])
    assert D.is_vertex([0.0, 0.0])
    assert not D.is_vertex([1.0, 1.0])
    assert not D.is_vertex([0.0, 1.0])  # only one face tight


def test_sample_ball_uniformity_and_membership():
    rng = np.random.default_rng(7)
    center = np.array([1.0, -2.0, 0.5])
    pts = np.array([sample_ball(center, 2.0, rng) for _ in range(4000)])
    r = np.linalg.norm(pts - center, axis=1)
    assert np.all(r <= 2.0 + 1e-12)
    # radial CDF of a uniform ball in 3d: P(r <= t) = (t/R)^3
    assert abs(np.mean(r <= 2.0 * 0.5 ** (1 / 3)) - 0.5) < 0.05
    assert np.allclose(pts.mean(axis=0), center, atol=0.1)
    assert np.array_equal(sample_ball(center, 0.0, rng), center)


def test_sample_polyhedron_box_with_cut():
    rng = np.random.default_rng(11)
    D = Polyhedron(H=np.array([[1.0, 1.0]]), h=np.array([2.5]),
                   lo=np.zeros(2), hi=np.full(2, 2.0))
    pts = np.array([sample_polyhedron(D, rng) for _ in range(2000)])
    assert all(D.contains(p) for p in pts)
    # area below the cut within the box is 2.875 of 4; corner region empty
    assert np.mean(pts.sum(axis=1) <= 2.0) == pytest.approx(
        2.0 / 2.875, abs=0.05)


def test_l1_ball_sampler_exact_membership():
    rng = np.random.default_rng(13)
    n = 6
    center = np.full(n, 50.0)
    hint = {"kind": "l1_ball", "center": center.tolist(),
            "scale": [1.0] * n, "radius": 20.0}
    # lifted rows: d - center <= u, center - d <= u, sum u <= radius
    H = np.zeros((2 * n + 1, 2 * n))
    h = np.zeros(2 * n + 1)
    for i in range(n):
        H[2 * i, i], H[2 * i, n + i] = 1.0, -1.0
        h[2 * i] = center[i]
        H[2 * i + 1, i], H[2 * i + 1, n + i] = -1.0, -1.0
        h[2 * i + 1] = -center[i]
    H[-1, n:] = 1.0
    h[-1] = 20.0
    D = Polyhedron(H=H, h=h, lo=np.zeros(n), hi=np.full(n, 100.0),
                   n_aux=n, aux_lo=np.zeros(n), aux_hi=np.full(n, np.inf),
                   sampler_hint=hint)
    pts = np.array([sample_polyhedron(D, rng) for _ in range(500)])
    dev = np.abs(pts - center).sum(axis=1)
    assert np.all(dev <= 20.0 + 1e-9)
    # radial CDF in L1: P(sum|z| <= t) = (t/R)^n
    assert abs(np.mean(dev <= 20.0 * 0.5 ** (1 / n)) - 0.5) < 0.07
    assert D.contains(pts[0])
    assert D.is_vertex(center + np.array([20.0] + [0.0] * (n - 1)))
    assert not D.is_vertex(center)


def test_hit_and_run_fallback():
    rng = np.random.default_rng(17)
    # narrow sliver: rejection from the box will fail, forcing hit-and-run
    D = Polyhedron(H=np.array([[1.0, -1.0], [-1.0, 1.0]]),
                   h=np.array([1e-3, 1e-3]),
                   lo=np.zeros(2), hi=np.ones(2))
    d = sample_polyhedron(D, rng)
    assert D.contains(d, tol=1e-6)


def test_instance_roundtrip(tmp_path):
    prob, unc = tiny_problem()
    path = tmp_path / "inst.json"
    save_instance(path, prob, unc)
    p2, u2 = load_instance(path)
    theta = np.array([0.5])
    x = np.array([1.0])
    d = np.array([1.7])
    assert det_value(p2, theta, x, d) == pytest.approx(
        det_value(prob, theta, x, d), abs=1e-12)
    assert np.array_equal(u2.lo, unc.lo) and np.array_equal(u2.hi, unc.hi)


def test_vertex_oracle_agrees_with_is_vertex():
    D = Polyhedron(H=np.array([[1.0, 2.0], [2.0, 1.0]]), h=np.array([4.0, 4.0]),
                   lo=np.zeros(2), hi=np.full(2, 3.0))
    verts = enumerate_vertices(D.H, D.h, D.lo, D.hi)
    assert len(verts) == 4  # (0,0), (2,0), (0,2), (4/3,4/3)
    for v in verts:
        assert D.is_vertex(v)
