import json

import numpy as np
import pytest

from screenbem.mesh import (
    build_uniform_square_mesh,
    classify_pair,
    panel_map,
)


def test_invalid_subdivision_rejected():
    with pytest.raises(ValueError):
        build_uniform_square_mesh(0)
    with pytest.raises(ValueError):
        build_uniform_square_mesh(-3)


def test_panel_and_edge_counts():
    for n in (1, 2, 3, 5):
        mesh = build_uniform_square_mesh(n)
        assert mesh.num_panels == n * n
        assert len(mesh.edges) == 2 * n * (n + 1)
        boundary = sum(1 for e in mesh.edges if e.is_boundary)
        assert boundary == 4 * n


def test_panels_cover_unit_square():
    mesh = build_uniform_square_mesh(4)
    total = sum(mesh.panel_area(q) for q in range(mesh.num_panels))
    assert total == pytest.approx(1.0, abs=1e-14)
    assert mesh.h == pytest.approx(np.sqrt(2) / 4)
    for q in range(mesh.num_panels):
        assert mesh.panel_diameter(q) == pytest.approx(mesh.h)


def test_panel_map_corners():
    mesh = build_uniform_square_mesh(2)
    # panel 0 is the lower-left cell
    assert np.allclose(panel_map(mesh, 0, [0.0, 0.0]), [0.0, 0.0])
    assert np.allclose(panel_map(mesh, 0, [1.0, 1.0]), [0.5, 0.5])
    assert np.allclose(panel_map(mesh, 3, [1.0, 1.0]), [1.0, 1.0])


def test_owner_is_smaller_index():
    mesh = build_uniform_square_mesh(3)
    for e in mesh.edges:
        if e.neighbor is not None:
            assert e.owner < e.neighbor


def test_edge_tangent_is_owner_induced():
    mesh = build_uniform_square_mesh(3)
    for e in mesh.edges:
        expected = mesh.induced_tangent(e.owner, e)
        assert np.allclose(e.tangent, expected)
        assert np.hypot(*e.tangent) == pytest.approx(1.0)


def test_classification_is_symmetric_and_total():
    mesh = build_uniform_square_mesh(3)
    for a in range(mesh.num_panels):
        for b in range(mesh.num_panels):
            pc = classify_pair(mesh, a, b)
            assert pc.tag == classify_pair(mesh, b, a).tag
            assert pc.tag in ("identical", "common_edge", "common_vertex",
                              "disjoint")


@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_class_counts_match_grid_combinatorics(n):
    mesh = build_uniform_square_mesh(n)
    counts = {"identical": 0, "common_edge": 0, "common_vertex": 0,
              "disjoint": 0}
    for a in range(mesh.num_panels):
        for b in range(mesh.num_panels):
            counts[classify_pair(mesh, a, b).tag] += 1
    assert counts["identical"] == n * n
    # ordered pairs sharing a full edge: horizontal + vertical neighbors
    assert counts["common_edge"] == 2 * 2 * n * (n - 1)
    # ordered pairs sharing exactly one vertex: diagonal neighbors
    assert counts["common_vertex"] == 2 * 2 * (n - 1) * (n - 1)
    assert sum(counts.values()) == n ** 4


def test_swapped_owners_flips_tangent():
    mesh = build_uniform_square_mesh(2)
    flipped = mesh.with_swapped_interior_owners()
    for e, f in zip(mesh.edges, flipped.edges):
        if e.is_boundary:
            assert f.owner == e.owner
            assert np.allclose(f.tangent, e.tangent)
        else:
            assert (f.owner, f.neighbor) == (e.neighbor, e.owner)
            assert np.allclose(f.tangent, -e.tangent)


def test_json_dump_parses():
    mesh = build_uniform_square_mesh(2)
    data = json.loads(mesh.to_json())
    assert len(data["panels"]) == 4
    assert len(data["vertices"]) == 9
