"""End-to-end acceptance checks for the codec.

Each test prints one PASS/FAIL line so the suite doubles as a checklist:

    pytest tests/test_acceptance.py -v -s
"""

import functools
import time

import numpy as np
import pytest

from conftest import make_cube, make_quad, make_sphere, merge_meshes
from ovoxel import OVoxelGrid, TriangleMesh
from ovoxel.cli import main as cli_main
from ovoxel.grid import downsample_structure
from ovoxel.material import bake_materials, bake_vertex_colors
from ovoxel.meshio import write_obj
from ovoxel.metrics import (
    BvhMesh,
    chamfer,
    f_score,
    mesh_distance,
    outer_shell_points,
    sample_surface,
)
from ovoxel.resample import (
    SparseFeatureGrid,
    channel_to_space_up,
    occupancy_masks,
    space_to_channel_down,
)
from ovoxel.surface import extract_mesh
from ovoxel.voxelize import (
    QefAccumulator,
    VoxelizeConfig,
    add_line_term,
    add_plane_term,
    add_point_term,
    solve_qef,
    voxelize,
)


def criterion(label):
    def deco(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            try:
                fn(*args, **kwargs)
            except BaseException:
                print(f"[FAIL] {label}")
                raise
            print(f"[PASS] {label}")

        return wrapper

    return deco


@criterion("sharp features: cube vertices and edge voxels within 1e-4")
def test_01_sharp_features():
    start = time.perf_counter()
    n = 32
    mesh = make_cube(side=0.8)
    grid = voxelize(mesh, VoxelizeConfig(resolution=n, normalize=False))
    rec = extract_mesh(grid)

    # distance from every reconstructed vertex to the analytic cube surface
    rel = np.abs(rec.vertices - 0.5)
    half = 0.4
    outside = np.linalg.norm(np.maximum(rel - half, 0.0), axis=1)
    inside = np.abs(half - rel.max(axis=1))
    dist = np.where(rel.max(axis=1) > half, outside, inside)
    assert dist.max() <= 1e-4

    # voxels crossed by an analytic cube edge: two coordinates in a
    # face-holding cell (0.1 and 0.9 fall in cells 3 and 28 at N=32)
    face_cells = {3, 28}
    c = grid.coords
    on_face = np.isin(c, list(face_cells))
    edge_voxels = on_face.sum(axis=1) >= 2
    assert np.count_nonzero(edge_voxels) > 0
    world = grid.dual_vertices_world()[edge_voxels]
    # distance to the nearest of the 12 cube edges
    rel = np.abs(world - 0.5)
    srt = np.sort(rel, axis=1)
    d_edge = np.sqrt((srt[:, 1] - half) ** 2 + (srt[:, 2] - half) ** 2)
    assert d_edge.max() <= 1e-4
    assert time.perf_counter() - start < 1.0


@criterion("convergence: sphere Hausdorff <= 1/N and MD ratio >= 3x")
def test_02_convergence():
    start = time.perf_counter()
    sphere = make_sphere(128, 128)
    bvh_src = BvhMesh(sphere)
    hausdorff = []
    md = []
    for n in (32, 64, 128):
        grid = voxelize(sphere, VoxelizeConfig(resolution=n, normalize=False))
        rec = extract_mesh(grid)
        bvh_rec = BvhMesh(rec)
        pr = sample_surface(rec, 20_000, seed=0)
        ps = sample_surface(sphere, 20_000, seed=0)
        h = max(
            np.sqrt(bvh_src.squared_distances(pr).max()),
            np.sqrt(bvh_rec.squared_distances(ps).max()),
        )
        hausdorff.append(h)
        assert h <= 1.0 / n
        md.append(mesh_distance(bvh_rec, bvh_src, n=20_000, seed=0))
    assert hausdorff[0] > hausdorff[1] > hausdorff[2]
    assert md[0] >= 3.0 * md[1]
    assert md[1] >= 3.0 * md[2]
    assert time.perf_counter() - start < 30.0


def connected_components(mesh: TriangleMesh) -> int:
    from scipy.sparse import coo_matrix
    from scipy.sparse.csgraph import connected_components as cc

    e = np.concatenate([mesh.faces[:, [0, 1]], mesh.faces[:, [1, 2]]])
    adj = coo_matrix(
        (np.ones(len(e)), (e[:, 0], e[:, 1])),
        shape=(mesh.num_vertices, mesh.num_vertices),
    )
    count, _ = cc(adj, directed=False)
    return count


@criterion("topology: nested spheres give 2 components, outer shell only")
def test_03_arbitrary_topology():
    outer = make_sphere(48, 48, radius=0.4)
    inner = make_sphere(48, 48, radius=0.2)
    grid = voxelize(
        merge_meshes(outer, inner), VoxelizeConfig(resolution=64, normalize=False)
    )
    rec = extract_mesh(grid)
    assert connected_components(rec) == 2

    shell = outer_shell_points(rec, n_points=20_000, n_views=100, seed=0)
    r = np.linalg.norm(shell - 0.5, axis=1)
    assert np.abs(r - 0.4).max() <= 2.0 / 64

    # an open patch stays open: boundary edges present, none doubly shared
    quad = make_quad(x=0.45, lo=0.2, hi=0.8)
    rec_q = extract_mesh(voxelize(quad, VoxelizeConfig(resolution=16, normalize=False)))
    assert rec_q.num_faces > 0
    e = np.sort(
        np.concatenate(
            [rec_q.faces[:, [0, 1]], rec_q.faces[:, [1, 2]], rec_q.faces[:, [2, 0]]]
        ),
        axis=1,
    )
    _, counts = np.unique(e, axis=0, return_counts=True)
    assert np.count_nonzero(counts == 1) > 0


@criterion("QEF: 1000 random accumulators within 2 grid-steps of 101^3 oracle")
def test_04_qef_oracle():
    rng = np.random.default_rng(2024)
    axis = np.linspace(0.0, 1.0, 101)
    gx, gy, gz = np.meshgrid(axis, axis, axis, indexing="ij")
    pts = np.stack([gx.ravel(), gy.ravel(), gz.ravel()], axis=1)
    step = 1.0 / 100
    tol = 2.0 * step * np.sqrt(3) + 1e-12
    for _ in range(1000):
        acc = QefAccumulator()
        for _ in range(int(rng.integers(2, 8))):
            nrm = rng.normal(size=3)
            nrm /= np.linalg.norm(nrm)
            add_plane_term(acc, rng.random(3) * 1.5 - 0.25, nrm)
        for _ in range(int(rng.integers(0, 3))):
            d = rng.normal(size=3)
            d /= np.linalg.norm(d)
            add_line_term(acc, rng.random(3), d, 1.0)
        add_point_term(acc, acc.q_bar, 0.05)
        v = solve_qef(acc)
        vals = ((pts @ acc.A) * pts).sum(axis=1) - 2.0 * pts @ acc.b + acc.c
        best = int(np.argmin(vals))
        assert np.linalg.norm(v - pts[best]) <= tol
        assert acc.evaluate(v) <= vals[best] + 1e-9


@criterion("material: constant-texture sphere round trip within 1/255")
def test_05_material_round_trip():
    from ovoxel.material import TextureSet
    from ovoxel.meshdata import MaterialSpec

    base = make_sphere(32, 32)
    uvs = np.zeros((base.num_faces, 3, 2))
    uvs[:, 1, 0] = 1.0
    uvs[:, 2, 1] = 1.0
    tex = np.empty((16, 16, 4))
    tex[..., :3] = [0.3, 0.5, 0.7]
    tex[..., 3] = 1.0
    mesh = TriangleMesh(
        base.vertices,
        base.faces,
        uvs=uvs,
        material_ids=np.zeros(base.num_faces, dtype=np.int64),
        materials=[
            MaterialSpec(
                name="m",
                metallic_factor=0.2,
                roughness_factor=0.8,
                textures=TextureSet(tex),
            )
        ],
    )
    grid = voxelize(mesh, VoxelizeConfig(resolution=64))
    baked = bake_materials(mesh, grid)
    rec = extract_mesh(baked)
    attrs = bake_vertex_colors(rec, baked)
    expected = np.array([0.3, 0.5, 0.7, 0.2, 0.8, 1.0])
    assert np.abs(attrs - expected).max() <= 1.0 / 255


@criterion("metrics: brute-force oracles, parallel squares, squared-d F1")
def test_06_metric_oracles():
    rng = np.random.default_rng(7)
    # chamfer vs O(n^2)
    x = rng.random((500, 3))
    y = rng.random((500, 3))
    d2 = ((x[:, None, :] - y[None, :, :]) ** 2).sum(axis=2)
    want = 0.5 * (d2.min(axis=1).mean() + d2.min(axis=0).mean())
    assert abs(chamfer(x, y) - want) <= 1e-12

    # point-to-mesh vs brute force over 500 triangles
    from ovoxel.material import project_point_to_triangle

    mesh = make_sphere(17, 17)  # 510 non-degenerate triangles among 578
    bvh = BvhMesh(mesh)
    pts = rng.random((100, 3))
    got = bvh.squared_distances(pts)
    corners = mesh.triangle_corners()
    areas = mesh.triangle_areas()
    corners = corners[areas > 0][:500]
    brute_mesh = TriangleMesh(
        corners.reshape(-1, 3), np.arange(len(corners) * 3).reshape(-1, 3)
    )
    bvh500 = BvhMesh(brute_mesh)
    got500 = bvh500.squared_distances(pts)
    for p, g in zip(pts, got500):
        best = min(
            float(np.sum((p - project_point_to_triangle(p, tri)[0]) ** 2))
            for tri in corners
        )
        assert abs(g - best) <= 1e-12

    # parallel unit squares offset 0.1 -> MD = 0.01
    sq0 = TriangleMesh(
        np.array([[0, 0, 0], [1, 0, 0], [1, 1, 0], [0, 1, 0]], dtype=float),
        np.array([[0, 1, 2], [0, 2, 3]]),
    )
    sq1 = TriangleMesh(
        sq0.vertices + [0, 0, 0.1], sq0.faces
    )
    assert abs(mesh_distance(sq0, sq1, n=50_000, seed=0) - 0.01) <= 1e-4

    # F-score thresholds act on squared distance
    gt = np.array([[0.0, 0.0, 0.0]])
    pred = np.array([[5e-4, 0.0, 0.0]])  # d^2 = 2.5e-7
    assert f_score(pred, gt, tau=1e-6).f == pytest.approx(1.0)
    assert f_score(pred, gt, tau=1e-8).f == 0.0


@criterion("resample: constant round trip, structure consistency, linearity")
def test_07_resample_properties():
    rng = np.random.default_rng(11)
    # constant-field round trip on a fully occupied block
    full = np.stack(
        np.meshgrid(*[np.arange(4)] * 3, indexing="ij"), -1
    ).reshape(-1, 3)
    g = SparseFeatureGrid(4, full, np.full((len(full), 4), 0.37))
    down = space_to_channel_down(g, 8)
    coords, masks = occupancy_masks(g)
    up = channel_to_space_up(down, coords, masks, 4)
    assert np.array_equal(up.coords, g.coords)
    assert np.array_equal(up.features, g.features)

    for _ in range(100):
        res = 8
        count = int(rng.integers(5, 100))
        flat = rng.choice(res**3, size=count, replace=False)
        coords = np.stack(
            [flat // (res * res), (flat // res) % res, flat % res], axis=1
        )
        fa = rng.random((count, 8))
        fb = rng.random((count, 8))
        alpha, beta = rng.random(2) * 4.0 - 2.0
        da = space_to_channel_down(SparseFeatureGrid(res, coords, fa), 8)
        db = space_to_channel_down(SparseFeatureGrid(res, coords, fb), 8)
        dc = space_to_channel_down(
            SparseFeatureGrid(res, coords, alpha * fa + beta * fb), 8
        )
        assert np.allclose(
            dc.features, alpha * da.features + beta * db.features, atol=1e-9
        )
        # structure consistency against the max-pool coordinate set
        shape_grid = OVoxelGrid(
            res,
            coords,
            np.full((count, 3), 0.5),
            np.zeros((count, 3), bool),
            np.ones(count),
        )
        assert np.array_equal(da.coords, downsample_structure(shape_grid, 2))


@criterion("performance: 100k tris N=512 voxelize <10s, extract <0.5s, stable")
def test_08_performance():
    mesh = make_sphere(226, 226)  # just over 100k triangles
    assert mesh.num_faces >= 100_000

    t0 = time.perf_counter()
    grid_a = voxelize(mesh, VoxelizeConfig(resolution=512))
    t_vox = time.perf_counter() - t0
    assert t_vox < 10.0, f"voxelize took {t_vox:.2f}s"

    t0 = time.perf_counter()
    rec_a = extract_mesh(grid_a)
    t_ext = time.perf_counter() - t0
    assert t_ext < 0.5, f"extract took {t_ext:.3f}s"

    grid_b = voxelize(mesh, VoxelizeConfig(resolution=512))
    rec_b = extract_mesh(grid_b)
    assert np.array_equal(grid_a.coords, grid_b.coords)
    assert np.array_equal(grid_a.dual_vertices, grid_b.dual_vertices)
    assert np.array_equal(grid_a.edge_flags, grid_b.edge_flags)
    assert np.array_equal(rec_a.vertices, rec_b.vertices)
    assert np.array_equal(rec_a.faces, rec_b.faces)
    print(f"  voxelize {t_vox:.2f}s, extract {t_ext:.3f}s", end=" ")


@criterion("token count: N=256 downsample-by-16 equals hash-set oracle")
def test_09_token_count():
    grid = voxelize(make_sphere(96, 96), VoxelizeConfig(resolution=256))
    tokens = downsample_structure(grid, 16)
    oracle = sorted({tuple(c // 16) for c in grid.coords})
    assert [tuple(c) for c in tokens] == oracle
    print(
        f"  active voxels : tokens = {len(grid)} : {len(tokens)} "
        f"({len(grid) / len(tokens):.1f}x)",
        end=" ",
    )


@criterion("determinism: CLI byte-identical over 3 runs and thread counts")
def test_10_cli_determinism(tmp_path, monkeypatch, capsys):
    cube = str(tmp_path / "cube.obj")
    write_obj(cube, make_cube(side=0.8))

    def run_all(tag):
        """Run every subcommand; return all output bytes and captured text."""
        d = tmp_path / tag
        d.mkdir()
        ovx = str(d / "c.ovx")
        assert cli_main(["voxelize", "--in", cube, "--res", "16", "--out", ovx]) == 0
        ply = str(d / "c.ply")
        assert cli_main(["mesh", "--in", ovx, "--out", ply]) == 0
        assert (
            cli_main(
                [
                    "metrics",
                    "--gt",
                    cube,
                    "--pred",
                    ply,
                    "--samples",
                    "5000",
                    "--views",
                    "16",
                    "--seed",
                    "0",
                    "--json",
                ]
            )
            == 0
        )
        txt = str(d / "coarse.txt")
        assert cli_main(["downsample", "--in", ovx, "--factor", "4", "--out", txt]) == 0
        feats = str(d / "f.ovx")
        from ovoxel.ovx_format import save_features

        rng = np.random.default_rng(5)
        save_features(
            feats,
            SparseFeatureGrid(
                8, np.array([[2, 2, 2], [3, 3, 3]]), rng.random((2, 8))
            ),
        )
        down = str(d / "down.ovx")
        assert (
            cli_main(["resample", "--in", feats, "--mode", "down", "--out", down]) == 0
        )
        assert cli_main(["info", "--in", ovx]) == 0
        stdout = capsys.readouterr().out
        blobs = [open(p, "rb").read() for p in (ovx, ply, txt, down)]
        return blobs, stdout

    runs = []
    for i, threads in enumerate(("1", "8", "1")):
        monkeypatch.setenv("OVX_THREADS", threads)
        runs.append(run_all(f"run{i}"))
    for other in runs[1:]:
        assert other[0] == runs[0][0]
        assert other[1] == runs[0][1]
