import json
import math

import numpy as np
import pytest

from gaitlp.terrain import (LOCAL_MAP_PITCH, FlatSection, Gap, HeightMap, OutOfBoundsError, Stairs,
                            SteppingStones, TerrainScenario, composite, elevation_at, export_pgm,
                            flat_world, generate, load_heightmap, local_heightmap, local_offsets,
                            min_edge_distance, random_stairs, save_heightmap)


def brute_edge_distance(hm, xy, thr):
    """Scan every adjacent cell pair of the whole map."""
    E, res = hm.elevations, hm.resolution
    ox, oy = hm.origin_xy
    best = math.inf
    for r in range(hm.n_rows):
        for c in range(hm.n_cols):
            yc, xc = oy + r * res, ox + c * res
            if c + 1 < hm.n_cols and abs(E[r, c + 1] - E[r, c]) > thr:
                ex = xc + res / 2
                d = math.hypot(xy[0] - ex, max(abs(xy[1] - yc) - res / 2, 0.0))
                best = min(best, d)
            if r + 1 < hm.n_rows and abs(E[r + 1, c] - E[r, c]) > thr:
                ey = yc + res / 2
                d = math.hypot(max(abs(xy[0] - xc) - res / 2, 0.0), xy[1] - ey)
                best = min(best, d)
    return best


def step_map(edge_x=1.0, rise=0.1, res=0.02, side=2.0):
    n = int(round(side / res))
    elev = np.tile(np.where((np.arange(n) + 0.5) * res >= edge_x, rise, 0.0), (n, 1))
    return HeightMap((0.5 * res, 0.5 * res - side / 2), res, elev)


def test_heightmap_rejects_bad_inputs():
    with pytest.raises(ValueError):
        HeightMap((0, 0), 0.0, np.zeros((2, 2)))
    with pytest.raises(ValueError):
        HeightMap((0, 0), 0.1, np.array([[0.0, np.nan]]))
    with pytest.raises(ValueError):
        HeightMap((0, 0), 0.1, np.zeros((0, 3)))


def test_random_stairs_patches_are_constant():
    hm = generate(random_stairs(side=20.0, cell_size=1.0, seed=3))
    xmin, xmax, ymin, ymax = hm.bounds
    assert (xmax - xmin, ymax - ymin) == pytest.approx((20.0, 20.0))
    patches = hm.elevations.reshape(20, 25, 20, 25)
    assert np.all(patches == patches[:, :1, :, :1])
    rng = np.random.default_rng(0)
    for _ in range(200):
        i, j = rng.integers(0, 20, size=2)
        a = (j + rng.uniform(0.02, 0.98), i + rng.uniform(0.02, 0.98))
        b = (j + rng.uniform(0.02, 0.98), i + rng.uniform(0.02, 0.98))
        assert elevation_at(hm, a) == elevation_at(hm, b)


def test_flat_world_is_zero_everywhere():
    hm = generate(flat_world(side=10.0))
    assert elevation_at(hm, (1.3, 2.7)) == 0.0
    assert np.all(hm.elevations == 0.0)


def test_generation_is_deterministic():
    feats = [FlatSection(2.0), Gap(0.4, 1.0), FlatSection(2.0)]
    a, b = generate(composite(feats, seed=5)), generate(composite(feats, seed=5))
    assert a == b and a.elevations.tobytes() == b.elevations.tobytes()
    assert generate(random_stairs(side=6.0, seed=1)) == generate(random_stairs(side=6.0, seed=1))
    assert generate(random_stairs(side=6.0, seed=1)) != generate(random_stairs(side=6.0, seed=2))


def test_composite_gap_reads_back_depth():
    hm = generate(composite([FlatSection(2.0), Gap(0.4, 1.0), FlatSection(2.0)]))
    assert elevation_at(hm, (2.2, 0.0)) == -1.0
    assert elevation_at(hm, (1.9, 0.0)) == 0.0
    assert elevation_at(hm, (2.5, 0.0)) == 0.0


def test_composite_stairs_and_stones():
    hm = generate(composite([FlatSection(2.0), Stairs(0.1, 0.3, 3), FlatSection(1.0),
                             SteppingStones(0.3, 0.1, 3), FlatSection(2.0)], width=3.0))
    assert elevation_at(hm, (2.15, 0.0)) == pytest.approx(0.1)
    assert elevation_at(hm, (2.75, 0.0)) == pytest.approx(0.3)
    assert elevation_at(hm, (3.5, 0.0)) == pytest.approx(0.3)
    # first stone row spans x in [4.0, 4.3], y in [-1.4, -1.1]
    assert elevation_at(hm, (4.05, -1.3)) == pytest.approx(0.3)
    assert elevation_at(hm, (3.95, -1.3)) == pytest.approx(-0.7)
    assert elevation_at(hm, (6.0, 0.0)) == pytest.approx(0.3)


def test_feature_validation_and_footprint():
    with pytest.raises(ValueError):
        Gap(0.0)
    with pytest.raises(ValueError):
        Stairs(0.0, 0.3, 2)
    with pytest.raises(ValueError):
        Stairs(0.1, 0.0, 2)
    with pytest.raises(ValueError):
        generate(composite([FlatSection(2.0), Gap(0.4), FlatSection(2.0)], length=3.0))
    with pytest.raises(ValueError):
        generate(flat_world(side=4.0, spawn_region=(0, 5, 0, 1)))
    with pytest.raises(ValueError):
        TerrainScenario("Moon")


def test_out_of_footprint_query_raises():
    hm = generate(flat_world(side=2.0))
    with pytest.raises(OutOfBoundsError):
        elevation_at(hm, (2.5, 0.5))
    with pytest.raises(OutOfBoundsError):
        local_heightmap(hm, (0.2, 0.2), 0.0, 0.0)


def test_local_heightmap_flat_offset():
    hm = generate(flat_world(side=4.0))
    m = local_heightmap(hm, (2.0, 2.0), 0.7, 0.45)
    assert m.shape == (32, 32)
    assert np.all(m == -0.45)


def test_local_heightmap_matches_resampling_oracle():
    hm = generate(random_stairs(side=6.0, cell_size=0.6, seed=4))
    rng = np.random.default_rng(1)
    for _ in range(20):
        xy, yaw, z = rng.uniform(1.0, 5.0, 2), rng.uniform(-math.pi, math.pi), rng.uniform(0, 1)
        m = local_heightmap(hm, xy, yaw, z)
        assert m.shape == (32, 32)
        for i, j in rng.integers(0, 32, size=(10, 2)):
            bx, by = (i - 15.5) * LOCAL_MAP_PITCH, (j - 15.5) * LOCAL_MAP_PITCH
            wx = xy[0] + math.cos(yaw) * bx - math.sin(yaw) * by
            wy = xy[1] + math.sin(yaw) * bx + math.cos(yaw) * by
            assert m[i, j] == elevation_at(hm, (wx, wy)) - z


def test_local_heightmap_rotation_consistency():
    # edge along world y at x = 1.0; facing +y the edge runs along the grid's first axis
    hm = step_map(edge_x=1.0, side=2.0, res=0.02)
    m = local_heightmap(hm, (1.0 + 0.01, 0.0), math.pi / 2, 0.0)
    # base-frame +y points to world -x: columns with j < 16 sample world x > 1.0
    assert np.all(m[:, :16] == 0.1) and np.all(m[:, 16:] == 0.0)
    assert local_offsets().shape == (32, 32, 2)


def test_min_edge_distance_examples():
    hm = step_map(edge_x=1.0, rise=0.1, res=0.02)
    assert min_edge_distance(hm, (0.9, 0.0), 0.01) == pytest.approx(0.1, abs=0.02)
    assert min_edge_distance(hm, (0.9, 0.0), 0.2) == math.inf
    assert min_edge_distance(generate(flat_world(side=2.0)), (1.0, 1.0), 0.01) == math.inf
    with pytest.raises(ValueError):
        min_edge_distance(hm, (0.9, 0.0), 0.0)


def test_min_edge_distance_matches_brute_force():
    hm = generate(random_stairs(side=2.0, cell_size=0.4, resolution=0.04, seed=9))
    rng = np.random.default_rng(2)
    for _ in range(40):
        xy = rng.uniform(0.05, 1.95, 2)
        want = brute_edge_distance(hm, xy, 0.01)
        want = want if want <= 0.5 else math.inf
        got = min_edge_distance(hm, xy, 0.01)
        assert got == pytest.approx(want, abs=1e-12) or (got == want == math.inf)


def test_heightmap_file_round_trip(tmp_path):
    hm = generate(random_stairs(side=4.0, seed=7))
    path = tmp_path / "map.json"
    save_heightmap(hm, path)
    back = load_heightmap(path)
    assert back == hm
    save_heightmap(back, tmp_path / "again.json")
    assert (tmp_path / "again.json").read_bytes() == path.read_bytes()


def test_pgm_export_scale(tmp_path):
    hm = generate(random_stairs(side=2.0, seed=7))
    side = export_pgm(hm, tmp_path / "m.pgm")
    raw = (tmp_path / "m.pgm").read_bytes()
    header, body = raw.split(b"65535\n", 1)
    pix = np.frombuffer(body, dtype=">u2").reshape(hm.n_rows, hm.n_cols)[::-1]
    assert np.allclose(side["z_min"] + pix * side["scale"], hm.elevations, atol=side["scale"])
    assert json.loads((tmp_path / "m.pgm.json").read_text())["scale"] == side["scale"]


def test_scenario_dict_round_trip():
    sc = composite([FlatSection(2.0), SteppingStones(0.3, 0.1, 2), FlatSection(2.0)], seed=3)
    again = TerrainScenario.from_dict(json.loads(json.dumps(sc.to_dict())))
    assert again == sc
    assert generate(again) == generate(sc)
