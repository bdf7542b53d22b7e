"""The numba and numpy kernels must agree bit for bit."""
import numpy as np
import pytest

from meshwalk import _jit, kernels
from meshwalk.pm.primitives import random_sphere, torus

pytestmark = pytest.mark.skipif(not _jit.NUMBA_AVAILABLE, reason="numba not installed")


def _edges(faces):
    e = np.sort(faces[:, [0, 1, 1, 2, 2, 0]].reshape(-1, 2), axis=1)
    e = np.unique(e, axis=0)
    return np.ascontiguousarray(e[:, 0]), np.ascontiguousarray(e[:, 1])


@pytest.mark.parametrize("mesh", [random_sphere(300, 3), torus(12, 6)], ids=["sphere", "torus"])
def test_quadrics_and_costs_identical(mesh):
    fq_np = kernels._np_face_quadrics(mesh.vertices, mesh.faces)
    fq_nb = kernels._nb_face_quadrics(mesh.vertices, mesh.faces)
    assert np.array_equal(fq_np, fq_nb)
    vq_np = kernels._np_vertex_quadrics(fq_np, mesh.faces, mesh.n_vertices)
    vq_nb = kernels._nb_vertex_quadrics(fq_nb, mesh.faces, mesh.n_vertices)
    assert np.array_equal(vq_np, vq_nb)
    a, b = _edges(mesh.faces)
    c_np, t_np = kernels._np_edge_costs(vq_np, mesh.vertices, a, b)
    c_nb, t_nb = kernels._nb_edge_costs(vq_nb, mesh.vertices, a, b)
    assert np.array_equal(c_np, c_nb)
    assert np.array_equal(t_np, t_nb)


def test_fold_over_identical():
    mesh = random_sphere(60, 1)
    rng = np.random.default_rng(0)
    for _ in range(200):
        tris = np.ascontiguousarray(mesh.faces[rng.choice(mesh.n_faces, 5, replace=False)])
        moved = np.zeros((5, 3), dtype=np.bool_)
        moved[np.arange(5), rng.integers(0, 3, 5)] = True
        target = rng.normal(size=3)
        assert kernels._np_fold_over(mesh.vertices, tris, moved, target) == \
            kernels._nb_fold_over(mesh.vertices, tris, moved, target)


def test_visibility_identical():
    rng = np.random.default_rng(5)
    vp = rng.uniform(0, 300, (12, 3))
    op = rng.uniform(0, 300, (50, 3))
    args = (vp, np.full(12, 60.0), op, rng.uniform(1, 20, 50), rng.integers(1, 11, 12))
    d1, l1 = kernels._np_visibility(*args)
    d2, l2 = kernels._nb_visibility(*args)
    assert np.array_equal(d1, d2)
    assert np.array_equal(l1, l2)


def test_bin_overlap_identical():
    rng = np.random.default_rng(2)
    s = np.sort(rng.uniform(0, 300, 2000))
    e = s + rng.exponential(0.5, s.size)
    assert np.array_equal(kernels._np_bin_overlap(s, e, 60.0, 5), kernels._nb_bin_overlap(s, e, 60.0, 5))


def test_bin_overlap_straddling_interval():
    out = kernels.bin_overlap(np.array([50.0]), np.array([130.0]), 60.0, 3)
    assert out.tolist() == [10.0, 60.0, 10.0]
