import numpy as np
import pytest

from screenbem import basis
from screenbem.mesh import build_uniform_square_mesh
from screenbem.spaces import (
    CONFORMING,
    build_space,
    eval_jump,
    eval_local_basis,
    panel_side_of_edge,
)


def gauss_grid(q):
    g, w = basis.gauss_01(q)
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), -1).reshape(-1, 2)
    return pts, np.outer(w, w).ravel()


def test_tensor_gram_is_diagonal():
    """The modal basis is L2-orthogonal on the reference square."""
    p = 2
    pts, w = gauss_grid(p + 1)
    V = basis.tensor_vals(pts, p)
    G = V.T @ (w[:, None] * V)
    expected = np.diag([na * nb for na in basis.deg1d_norms(p)
                        for nb in basis.deg1d_norms(p)])
    assert np.allclose(G, expected, atol=1e-14)


def test_local_dimension():
    for p in range(0, 5):
        assert len(eval_local_basis(p, [0.3, 0.7])) == (p + 1) ** 2


@pytest.mark.parametrize("p", [1, 2, 4])
def test_curl_coefficients_reproduce_derivatives(p):
    """Columns of the curl coefficient matrices expand the actual curls."""
    pts, _ = gauss_grid(p + 2)
    V, curls = basis.tensor_vals_curls(pts, p)
    C1, C2 = basis.curl_coefficient_matrices(p)
    assert np.allclose(basis.tensor_vals(pts, p) @ C1, curls[:, :, 0],
                       atol=1e-12)
    assert np.allclose(basis.tensor_vals(pts, p) @ C2, curls[:, :, 1],
                       atol=1e-12)


@pytest.mark.parametrize("p", [1, 3])
def test_edge_traces_reproduce_boundary_values(p):
    t = np.linspace(0, 1, 7)
    P1 = basis.legendre_vals(t, p)
    full = basis.tensor_vals
    for side, pts in (("bottom", np.stack([t, 0 * t], -1)),
                      ("top", np.stack([t, 0 * t + 1], -1)),
                      ("left", np.stack([0 * t, t], -1)),
                      ("right", np.stack([0 * t + 1, t], -1))):
        T = basis.edge_trace_matrices(p)[side]
        assert np.allclose(P1 @ T, full(pts, p), atol=1e-13)


def test_dg_space_dof_layout():
    mesh = build_uniform_square_mesh(3)
    space = build_space(mesh, 2)
    assert space.total_dofs == 9 * 9
    assert space.local_dim(0) == 9
    assert len(space.panel_dofs(4)) == 9


def test_constant_degree_zero_allowed_discontinuous_only():
    mesh = build_uniform_square_mesh(2)
    space = build_space(mesh, 0)
    assert space.total_dofs == 4
    with pytest.raises(ValueError):
        build_space(mesh, 0, CONFORMING)


def test_conforming_dimension():
    for n, p in ((2, 1), (3, 2), (4, 3)):
        conf = build_space(build_uniform_square_mesh(n), p, CONFORMING)
        assert conf.total_dofs == (n * p - 1) ** 2


def test_embedded_functions_have_no_jumps():
    """Every conforming basis image is continuous with zero boundary trace."""
    n, p = 3, 2
    conf = build_space(build_uniform_square_mesh(n), p, CONFORMING)
    dg = conf.dg_space
    rng = np.random.default_rng(7)
    c = conf.embedding @ rng.standard_normal(conf.total_dofs)
    s = np.linspace(0, 1, 5)
    for edge in dg.mesh.edges:
        jumps = eval_jump(dg, edge, s, c)
        if edge.is_boundary:
            assert np.max(np.abs(jumps)) < 1e-12   # zero trace
        else:
            assert np.max(np.abs(jumps)) < 1e-12   # continuity


def test_embedding_partition_consistency():
    """An embedded function evaluates identically from both panels."""
    conf = build_space(build_uniform_square_mesh(2), 1, CONFORMING)
    dg = conf.dg_space
    c = conf.embedding @ np.array([1.0])
    # the single interior hat peaks at the mesh center with value 1
    for q, ref in ((0, [1.0, 1.0]), (1, [0.0, 1.0]),
                   (2, [1.0, 0.0]), (3, [0.0, 0.0])):
        val = dg.eval_on_panel(q, np.array([ref]), c)[0]
        assert val == pytest.approx(1.0, abs=1e-14)


def test_jump_sign_owner_minus_neighbor():
    mesh = build_uniform_square_mesh(2)
    space = build_space(mesh, 0)
    c = np.array([2.0, 0.5, 0.5, 0.5])
    edge = next(e for e in mesh.edges
                if not e.is_boundary and e.owner == 0)
    assert eval_jump(space, edge, [0.5], c)[0] == pytest.approx(1.5)


def test_panel_side_of_edge():
    mesh = build_uniform_square_mesh(2)
    edge = next(e for e in mesh.edges
                if not e.is_boundary and set(e.panels) == {0, 2})
    assert panel_side_of_edge(mesh, edge, 0) == "top"
    assert panel_side_of_edge(mesh, edge, 2) == "bottom"
