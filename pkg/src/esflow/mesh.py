"""Structured hexahedral meshes with curvilinear (tri-linear) element maps.

Elements live on a K1 x K2 x K3 lattice of cells; vertices may be randomly
perturbed to produce non-affine, genuinely curvilinear elements.  Metric
terms are computed in a curl-invariant conservative form so that the
discrete geometric conservation law holds to machine precision for every
polynomial order.

Connectivity uses identity face orientation (structured lattice), so a
neighbor's face trace is index-aligned with the owner's.  Faces are
numbered 0..5 as (axis, side): 0 = xi1-minus, 1 = xi1-plus, 2 = xi2-minus,
3 = xi2-plus, 4 = xi3-minus, 5 = xi3-plus.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .operators import TensorOps, get_ops

__all__ = [
    "BC_INTERIOR", "BC_DIRICHLET", "BC_WALL", "GridSpec", "Mesh",
    "MeshGenerationError", "build_box_mesh", "export_vtk", "save_mesh_text",
]

BC_INTERIOR = 0
BC_DIRICHLET = 1
BC_WALL = 2


class MeshGenerationError(RuntimeError):
    pass


@dataclass(frozen=True)
class GridSpec:
    """Parameters for a lattice mesh on an axis-aligned box."""

    K: tuple[int, int, int]
    p: int
    lo: tuple[float, float, float] = (0.0, 0.0, 0.0)
    hi: tuple[float, float, float] = (1.0, 1.0, 1.0)
    periodic: tuple[bool, bool, bool] = (False, False, False)
    alpha: float = 0.0          # vertex perturbation amplitude, fraction of h
    seed: int = 0
    # boundary tag per (axis, side); ignored on periodic axes
    bc: tuple[tuple[int, int], ...] = (
        (BC_DIRICHLET, BC_DIRICHLET),
        (BC_DIRICHLET, BC_DIRICHLET),
        (BC_DIRICHLET, BC_DIRICHLET),
    )
    # optional activity mask (K1, K2, K3); faces exposed by inactive
    # cells get inactive_bc
    active: np.ndarray | None = None
    inactive_bc: int = BC_WALL


@dataclass
class Mesh:
    """Immutable-after-build element-major mesh with precomputed metrics."""

    p: int
    n_elem: int
    verts: np.ndarray             # (E, 8, 3) corner coordinates
    vertex_ids: np.ndarray        # (E, 8) global vertex indices
    n_vertices: int
    X: np.ndarray                 # (E, N, N, N, 3) solution-point coordinates
    J: np.ndarray                 # (E, N, N, N)
    ahat: np.ndarray              # (E, N, N, N, 3, 3), [l, m] = J dxi_l/dx_m
    neighbors: np.ndarray         # (E, 6) neighbor element id or -1
    bc: np.ndarray                # (E, 6) boundary tag (0 on interior faces)
    volumes: np.ndarray = field(init=False)   # (E,)
    h: np.ndarray = field(init=False)         # (E,) grid scale cbrt(vol)/(p+1)

    def __post_init__(self):
        tops = get_ops(self.p)
        self.volumes = np.einsum("ijk,eijk->e", tops.weights3, self.J)
        self.h = np.cbrt(self.volumes) / (self.p + 1)

    @property
    def ops(self) -> TensorOps:
        return get_ops(self.p)

    def gcl_residual(self) -> float:
        """max_m || sum_l D_xi_l ahat^l_m ||_inf over all elements."""
        tops = self.ops
        res = np.zeros(self.J.shape + (3,))
        for l in (1, 2, 3):
            res += tops.apply_derivative(l, self.ahat[..., l - 1, :])
        return float(np.abs(res).max())


# corner c = di + 2 dj + 4 dk for offsets (di, dj, dk) in {0, 1}
_CORNER_OFFSETS = np.array([(c & 1, (c >> 1) & 1, (c >> 2) & 1)
                            for c in range(8)])


def _trilinear(verts: np.ndarray, xi: np.ndarray) -> np.ndarray:
    """Evaluate tri-linear maps.  verts: (E, 8, 3); xi: (N,N,N,3) in [-1,1]^3.
    Returns (E, N,N,N, 3)."""
    t = 0.5 * (xi + 1.0)  # to [0,1]
    w = np.ones(t.shape[:-1] + (8,))
    for c in range(8):
        for d in range(3):
            w[..., c] = w[..., c] * (t[..., d] if _CORNER_OFFSETS[c, d]
                                     else 1.0 - t[..., d])
    return np.einsum("ijkc,ecm->eijkm", w, verts)


def compute_metrics(X: np.ndarray, tops: TensorOps):
    """Jacobian and GCL-exact metric terms from nodal coordinates.

    Uses the conservative curl form: with (n, m, l) a cyclic permutation of
    the physical indices, the row ahat^i_n is component i of
    -curl_xi(X_l grad_xi X_m).  The discrete divergence of a discrete curl
    vanishes identically on the tensor-product grid, so the GCL holds to
    roundoff regardless of mapping degree.

    X: (E, N, N, N, 3).  Returns (J, ahat) with ahat (E, N,N,N, 3, 3).
    """
    E = X.shape[0]
    N = tops.base.N
    # dX[..., n, i] = dX_n / dxi_i
    dX = np.stack([tops.apply_derivative(i, X) for i in (1, 2, 3)], axis=-1)
    J = (dX[..., 0, 0] * (dX[..., 1, 1] * dX[..., 2, 2] - dX[..., 1, 2] * dX[..., 2, 1])
         - dX[..., 0, 1] * (dX[..., 1, 0] * dX[..., 2, 2] - dX[..., 1, 2] * dX[..., 2, 0])
         + dX[..., 0, 2] * (dX[..., 1, 0] * dX[..., 2, 1] - dX[..., 1, 1] * dX[..., 2, 0]))

    ahat = np.empty((E, N, N, N, 3, 3))
    cyc = ((0, 1, 2), (1, 2, 0), (2, 0, 1))
    for n, m, l in cyc:
        # A_k = X_l dX_m/dxi_k, then ahat^i_n = -[curl_xi A]_i
        A = X[..., l, None] * dX[..., m, :]
        dA = np.stack([tops.apply_derivative(i, A) for i in (1, 2, 3)], axis=-1)
        # [curl A]_i = dA_k/dxi_j - dA_j/dxi_k, (i, j, k) cyclic
        for i, j, k in cyc:
            ahat[..., i, n] = -(dA[..., k, j] - dA[..., j, k])
    return J, ahat


def build_box_mesh(spec: GridSpec) -> Mesh:
    """Build a (possibly perturbed, possibly masked) lattice mesh."""
    K1, K2, K3 = spec.K
    if min(K1, K2, K3) < 1:
        raise MeshGenerationError(f"need K >= 1 per direction, got {spec.K}")
    if not (0.0 <= spec.alpha < 0.25):
        raise MeshGenerationError(
            f"perturbation amplitude must be in [0, 0.25), got {spec.alpha}")

    lo = np.asarray(spec.lo, dtype=float)
    hi = np.asarray(spec.hi, dtype=float)
    hcell = (hi - lo) / np.array([K1, K2, K3], dtype=float)

    # vertex lattice (K1+1, K2+1, K3+1, 3)
    g = np.meshgrid(np.linspace(lo[0], hi[0], K1 + 1),
                    np.linspace(lo[1], hi[1], K2 + 1),
                    np.linspace(lo[2], hi[2], K3 + 1), indexing="ij")
    vlat = np.stack(g, axis=-1)

    if spec.alpha > 0.0:
        rng = np.random.default_rng(spec.seed)
        disp = spec.alpha * hcell * rng.uniform(-1.0, 1.0, vlat.shape)
        for d in range(3):
            idx_lo = [slice(None)] * 3
            idx_hi = [slice(None)] * 3
            idx_lo[d], idx_hi[d] = 0, -1
            if spec.periodic[d]:
                disp[tuple(idx_hi)] = disp[tuple(idx_lo)]
            else:
                disp[tuple(idx_lo)] = 0.0
                disp[tuple(idx_hi)] = 0.0
        vlat = vlat + disp

    active = spec.active
    if active is None:
        active = np.ones((K1, K2, K3), dtype=bool)
    else:
        active = np.asarray(active, dtype=bool)
        if active.shape != (K1, K2, K3):
            raise MeshGenerationError("activity mask shape mismatch")
    cell_ids = np.full((K1, K2, K3), -1, dtype=int)
    cells = np.argwhere(active)
    cell_ids[tuple(cells.T)] = np.arange(len(cells))
    E = len(cells)

    # per-element corner vertices and global vertex ids
    nv_shape = (K1 + 1, K2 + 1, K3 + 1)
    corners = cells[:, None, :] + _CORNER_OFFSETS[None, :, :]  # (E, 8, 3)
    verts = vlat[tuple(corners.transpose(2, 0, 1))]            # (E, 8, 3)
    # identify seam vertices in periodic directions so vertex-based fields
    # (viscosity smoothing) are continuous across the wrap
    id_idx = corners.copy()
    for d in range(3):
        if spec.periodic[d]:
            id_idx[:, :, d] %= (K1, K2, K3)[d]
    vertex_ids = np.ravel_multi_index(tuple(id_idx.transpose(2, 0, 1)),
                                      nv_shape)

    # connectivity
    neighbors = np.full((E, 6), -1, dtype=int)
    bc = np.zeros((E, 6), dtype=int)
    Ks = (K1, K2, K3)
    for d in range(3):
        for side in (0, 1):
            f = 2 * d + side
            nb_idx = cells.copy()
            nb_idx[:, d] += 1 if side else -1
            off_grid = (nb_idx[:, d] < 0) | (nb_idx[:, d] >= Ks[d])
            if spec.periodic[d]:
                nb_idx[:, d] %= Ks[d]
                off_grid[:] = False
            inb = np.where(off_grid, -1,
                           cell_ids[tuple(np.clip(nb_idx, 0,
                                                  np.array(Ks) - 1).T)])
            neighbors[:, f] = inb
            bc[:, f] = np.where(
                inb >= 0, BC_INTERIOR,
                np.where(off_grid, spec.bc[d][side], spec.inactive_bc))

    # nodes and metrics
    tops = get_ops(spec.p)
    x1 = tops.base.nodes
    xi = np.stack(np.meshgrid(x1, x1, x1, indexing="ij"), axis=-1)
    X = _trilinear(verts, xi)
    J, ahat = compute_metrics(X, tops)
    if np.any(J <= 0.0):
        bad = int(np.argwhere(J <= 0.0)[0][0])
        raise MeshGenerationError(
            f"nonpositive Jacobian in element {bad} "
            f"(min J = {J.min():.3e}); reduce perturbation amplitude")

    mesh = Mesh(p=spec.p, n_elem=E, verts=verts, vertex_ids=vertex_ids,
                n_vertices=int(np.prod(nv_shape)), X=X, J=J, ahat=ahat,
                neighbors=neighbors, bc=bc)
    res = mesh.gcl_residual()
    if res > 1e-12:
        raise MeshGenerationError(f"GCL residual {res:.3e} exceeds 1e-12")
    return mesh


def save_mesh_text(mesh: Mesh, path: str) -> None:
    """Plain-text dump: header with counts, vertex table, connectivity,
    boundary tags."""
    with open(path, "w") as fh:
        fh.write(f"# hex mesh: elements={mesh.n_elem} p={mesh.p}\n")
        fh.write("# element corners (8 x 3 per element), then "
                 "neighbor ids (6) and bc tags (6)\n")
        for e in range(mesh.n_elem):
            fh.write(f"element {e}\n")
            for c in range(8):
                fh.write("  " + " ".join(f"{v:.17g}"
                                         for v in mesh.verts[e, c]) + "\n")
            fh.write("  nbr " + " ".join(map(str, mesh.neighbors[e])) + "\n")
            fh.write("  bc  " + " ".join(map(str, mesh.bc[e])) + "\n")


def export_vtk(mesh: Mesh, path: str, fields: dict | None = None) -> None:
    """Legacy-VTK unstructured export of the solution points (as vertices)
    with optional point-data scalar/vector fields keyed by name."""
    pts = mesh.X.reshape(-1, 3)
    npts = pts.shape[0]
    with open(path, "w") as fh:
        fh.write("# vtk DataFile Version 3.0\nsolution points\nASCII\n")
        fh.write("DATASET UNSTRUCTURED_GRID\n")
        fh.write(f"POINTS {npts} double\n")
        np.savetxt(fh, pts, fmt="%.12g")
        fh.write(f"CELLS {npts} {2 * npts}\n")
        np.savetxt(fh, np.column_stack([np.ones(npts, int),
                                        np.arange(npts)]), fmt="%d")
        fh.write(f"CELL_TYPES {npts}\n")
        np.savetxt(fh, np.ones(npts, int), fmt="%d")
        if fields:
            fh.write(f"POINT_DATA {npts}\n")
            for name, arr in fields.items():
                a = np.asarray(arr).reshape(npts, -1)
                if a.shape[1] == 1:
                    fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
                    np.savetxt(fh, a, fmt="%.12g")
                else:
                    fh.write(f"VECTORS {name} double\n")
                    np.savetxt(fh, a[:, :3], fmt="%.12g")
