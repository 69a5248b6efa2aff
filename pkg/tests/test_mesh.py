"""Mesh construction, connectivity and metric identities."""
import numpy as np
import pytest

from esflow import mesh as meshmod
from esflow.mesh import (BC_DIRICHLET, BC_INTERIOR, BC_WALL, GridSpec,
                         MeshGenerationError, build_box_mesh)


def perturbed_spec(p=4, K=(2, 2, 2), alpha=0.12, **kw):
    return GridSpec(K=K, p=p, alpha=alpha, seed=7, **kw)


@pytest.mark.parametrize("p", [1, 2, 4, 6])
def test_metric_identity_on_perturbed_mesh(p):
    m = build_box_mesh(perturbed_spec(p=p))
    assert m.gcl_residual() <= 1e-12


def test_volumes_partition_the_box():
    m = build_box_mesh(perturbed_spec(p=3, K=(3, 2, 2)))
    assert abs(m.volumes.sum() - 1.0) < 1e-12
    assert np.all(m.volumes > 0)


def test_cartesian_jacobian_constant():
    m = build_box_mesh(GridSpec(K=(2, 2, 2), p=2))
    # uniform 2x2x2 box on [0,1]^3: J = (h/2)^3 with h = 0.5
    assert np.abs(m.J - 0.25 ** 3).max() < 1e-13


def test_periodic_neighbors_wrap():
    m = build_box_mesh(GridSpec(K=(3, 1, 1), p=1,
                                periodic=(True, True, True)))
    # element 0's minus-x neighbor is element 2 and vice versa
    assert m.neighbors[0, 0] == 2
    assert m.neighbors[2, 1] == 0
    assert np.all(m.bc == BC_INTERIOR)


def test_boundary_tags_nonperiodic():
    spec = GridSpec(K=(2, 1, 1), p=1,
                    bc=((BC_DIRICHLET, BC_WALL),) * 3)
    m = build_box_mesh(spec)
    assert m.neighbors[0, 0] == -1 and m.bc[0, 0] == BC_DIRICHLET
    assert m.neighbors[1, 1] == -1 and m.bc[1, 1] == BC_WALL
    assert m.neighbors[0, 1] == 1 and m.bc[0, 1] == BC_INTERIOR


def test_active_mask_exposes_internal_walls():
    active = np.ones((2, 2, 1), dtype=bool)
    active[0, 0, 0] = False
    spec = GridSpec(K=(2, 2, 1), p=1, active=active, inactive_bc=BC_WALL)
    m = build_box_mesh(spec)
    assert m.n_elem == 3
    # the element at (1, 0) sees a wall where the masked cell was
    # element ordering follows np.argwhere: (0,1), (1,0), (1,1)
    assert m.bc[1, 0] == BC_WALL        # minus-x face of cell (1,0)
    assert m.bc[0, 2] == BC_WALL        # minus-y face of cell (0,1)


def test_shared_face_vertices_have_shared_ids():
    m = build_box_mesh(perturbed_spec(p=2, K=(2, 1, 1)))
    # plus-x corners of element 0 coincide with minus-x corners of element 1
    ids0 = m.vertex_ids[0].reshape(2, 2, 2, order="F")  # (di, dj, dk)
    # corner c = di + 2 dj + 4 dk
    plus_x = m.vertex_ids[0][[1, 3, 5, 7]]
    minus_x = m.vertex_ids[1][[0, 2, 4, 6]]
    assert np.array_equal(np.sort(plus_x), np.sort(minus_x))


def test_periodic_seam_vertices_identified():
    m = build_box_mesh(GridSpec(K=(2, 1, 1), p=1,
                                periodic=(True, False, False)))
    plus_x_of_last = m.vertex_ids[1][[1, 3, 5, 7]]
    minus_x_of_first = m.vertex_ids[0][[0, 2, 4, 6]]
    assert np.array_equal(np.sort(plus_x_of_last), np.sort(minus_x_of_first))


def test_excessive_perturbation_rejected():
    with pytest.raises(MeshGenerationError):
        build_box_mesh(GridSpec(K=(2, 2, 2), p=2, alpha=0.3))


def test_zero_elements_rejected():
    with pytest.raises(MeshGenerationError):
        build_box_mesh(GridSpec(K=(0, 1, 1), p=2))


def test_grid_scale_definition():
    m = build_box_mesh(GridSpec(K=(2, 2, 2), p=3))
    assert np.allclose(m.h, np.cbrt(m.volumes) / (m.p + 1))


def test_text_and_vtk_export_roundtrip(tmp_path):
    m = build_box_mesh(GridSpec(K=(2, 1, 1), p=1))
    mpath = tmp_path / "mesh.txt"
    meshmod.save_mesh_text(m, str(mpath))
    text = mpath.read_text()
    assert "elements=2" in text and text.count("\nelement ") == 2
    vpath = tmp_path / "mesh.vtk"
    meshmod.export_vtk(m, str(vpath), {"J": m.J})
    head = vpath.read_text().splitlines()
    assert head[0].startswith("# vtk DataFile")
    assert any(line.startswith("POINTS") for line in head)
