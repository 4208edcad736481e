import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from nifslab.catalog import EXAMPLE_RADIUS
from nifslab.dimension import (
    NoiseFloorError,
    PointCloud,
    area_positivity,
    box_counting,
    box_counts,
    dimension_sweep,
    dyadic_ladder,
    load_cloud,
    render_png,
    s_energy,
    sample_limit_set,
    save_cloud,
)
from nifslab.gibbs import build_gibbs

from conftest import nonreal

LOG23 = math.log(2) / math.log(3)


@pytest.fixture(scope="module")
def cantor_cloud(cantor_family):
    return sample_limit_set(cantor_family, 0.0, 100_000, 1e-6, seed=1)


def disk_cloud(count, seed=0, radius=1.0):
    rng = np.random.default_rng(seed)
    pts = radius * np.sqrt(rng.random(count)) * np.exp(2j * np.pi * rng.random(count))
    return PointCloud(pts, 2, 0.0, anchor=-radius - 1j * radius)


def test_all_ones_stream_gives_zero(example):
    cloud = sample_limit_set(example, nonreal(0.5), 50, 1e-8,
                             sampler=lambda rng, n, d: np.zeros((n, d), dtype=int))
    assert np.all(cloud.points == 0)


def test_cantor_gap(cantor_cloud):
    p = cantor_cloud.points.real
    tau = cantor_cloud.error_bound
    assert tau <= 1e-6
    assert p.min() >= -tau and p.max() <= 1 + tau
    assert not np.any((p > 1 / 3 + tau) & (p < 2 / 3 - tau))


def test_cantor_estimate(cantor_cloud):
    est = box_counting(cantor_cloud)
    assert abs(est.estimate - LOG23) <= 0.05
    assert np.all(np.diff(est.eps) < 0)
    assert np.all(np.diff(est.counts) >= 0)


def test_cloud_diameter(example):
    cloud = sample_limit_set(example, nonreal(0.6, 2.0), 100_000, 1e-6)
    assert len(cloud) == 100_000
    assert cloud.diameter() <= 2 * EXAMPLE_RADIUS


def test_single_point_estimate_zero():
    cloud = PointCloud(np.array([0.3 + 0.2j]), 2, 1e-9)
    assert box_counting(cloud, dyadic_ladder(0.5, 6)).estimate == pytest.approx(0.0, abs=1e-12)
    assert area_positivity(cloud, dyadic_ladder(0.5, 30)).covered[-1] < 1e-15


def test_noise_floor_rejected(cantor_cloud):
    with pytest.raises(NoiseFloorError):
        box_counting(cantor_cloud, dyadic_ladder(1e-4, 8))
    with pytest.raises(NoiseFloorError):
        box_counting(cantor_cloud, [0.1, 0.05, 0.025])


def test_sampling_deterministic(example):
    a = sample_limit_set(example, nonreal(0.5), 5000, 1e-8, seed=9)
    b = sample_limit_set(example, nonreal(0.5), 5000, 1e-8, seed=9)
    c = sample_limit_set(example, nonreal(0.5), 5000, 1e-8, seed=10)
    assert a.points.tobytes() == b.points.tobytes()
    assert a.points.tobytes() != c.points.tobytes()


def test_measure_driven_sampling(slopes):
    g = build_gibbs(slopes, 0.0, 1.0, 6)
    cloud = sample_limit_set(slopes, 0.0, 20_000, 1e-8, measure=g, seed=2)
    # first map carries mass 2/3 and sends X to [0, 1/2]
    assert np.mean(cloud.points.real <= 0.5) == pytest.approx(2 / 3, abs=0.02)


def test_disk_area_oracle():
    cloud = disk_cloud(400_000)
    table = area_positivity(cloud, dyadic_ladder(0.25, 5))
    assert table.covered[-1] == pytest.approx(math.pi, rel=0.05)
    assert table.verdict == "positive-area-consistent"


def test_energy_trivial_cases():
    cloud = PointCloud(np.array([0, 1, 0.3 + 0.5j]), 2, 0.0)
    assert s_energy(cloud, 0.0).value == 1.0
    two = PointCloud(np.array([0, 1j]), 2, 0.0)
    assert s_energy(two, 2.0).value == pytest.approx(1.0)


def test_energy_excludes_close_pairs():
    cloud = PointCloud(np.array([0, 1e-9, 1]), 2, 1e-6)
    e = s_energy(cloud, 1.0)
    assert e.excluded == 2 and e.pairs == 4
    with pytest.raises(ValueError):
        s_energy(PointCloud(np.array([0, 1e-9]), 2, 1e-6), 1.0)


def test_energy_dichotomy(example):
    t = nonreal(0.55)
    s_t = math.log(2) / -math.log(0.55)
    small = [s_energy(sample_limit_set(example, t, n, 1e-9, seed=3), 0.5).value for n in (1000, 4000)]
    big = [s_energy(sample_limit_set(example, t, n, 1e-9, seed=3), s_t + 0.8).value
           for n in (1000, 4000)]
    assert small[1] / small[0] < 1.2
    assert big[1] / big[0] > 1.2


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.floats(0.0, 2.0), st.floats(0.01, 1.0))
def test_energy_monotone_in_s(seed, s, ds):
    pts = disk_cloud(200, seed, radius=0.5).points
    cloud = PointCloud(pts / (np.abs(pts[:, None] - pts[None, :]).max()), 2, 0.0)
    assert s_energy(cloud, s + ds).value >= s_energy(cloud, s).value


@settings(max_examples=20, deadline=None)
@given(st.integers(0, 1000), st.integers(1, 400))
def test_counts_monotone(seed, count):
    cloud = disk_cloud(count, seed)
    c = box_counts(cloud, dyadic_ladder(0.5, 8))
    assert np.all(np.diff(c) >= 0)


def test_translation_and_rotation_invariance(example):
    cloud = sample_limit_set(example, nonreal(0.5, 1.0), 200_000, 1e-6, seed=4)
    ladder = dyadic_ladder(cloud.extent() / 16, 8)
    base = box_counting(cloud, ladder).estimate
    assert box_counting(cloud.translated(0.37 - 1.3j), ladder).estimate == pytest.approx(base, abs=1e-12)
    for angle in (0.3, 0.7, 1.5, 2.5):
        assert box_counting(cloud.rotated(angle), ladder).estimate == pytest.approx(base, abs=0.02)


def test_sweep_records(example):
    grid = [0.45 * np.exp(0.8j), 0.5 * np.exp(0.8j), 0.55 * np.exp(0.8j)]
    res = dimension_sweep(example, grid, points=20_000, tolerance=1e-6)
    targets = [r.target for r in res.records]
    assert targets == pytest.approx([0.8680, 1.0, 1.1594], abs=1e-4)
    assert all(r.verdict in ("match", "mismatch") for r in res.records)


def test_sweep_empty_and_errors(example):
    assert dimension_sweep(example, []).records == []
    res = dimension_sweep(example, [0.5, nonreal(0.5)], points=5000)
    assert res.records[0].verdict == "error"
    assert res.records[1].verdict != "error"


def test_sweep_area_branch(example):
    res = dimension_sweep(example, [nonreal(0.72, 1.2)], points=50_000)
    r = res.records[0]
    assert r.s > 2 and r.target == 2.0
    assert r.verdict in ("positive-area-consistent", "inconclusive")


def test_render_cantor_gap(tmp_path, cantor_cloud):
    from PIL import Image

    path = tmp_path / "c.png"
    render_png(cantor_cloud, 1 / 300, path, box=(0j, 1 + 0j))
    img = np.array(Image.open(path))
    row = img[0]
    w = row.size
    gap = row[int(w * 0.36):int(w * 0.63)]
    assert np.all(gap == 255)
    assert np.any(row[: w // 3] == 0) and np.any(row[2 * w // 3:] == 0)


def test_cloud_io(tmp_path):
    cloud = disk_cloud(50)
    for name in ("a.npy", "a.txt"):
        save_cloud(cloud, tmp_path / name)
        back = load_cloud(tmp_path / name)
        assert np.allclose(back.points, cloud.points, atol=1e-11)
