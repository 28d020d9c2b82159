import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st
from scipy import stats

from bohmbell.sampling import (
    DiskPoint,
    SeededRng,
    disk_to_positions,
    equilibrium_batch,
    positions_to_disk,
    sample_disk,
    sample_pair,
    setting_key,
    single_equilibrium_batch,
    stream_uniforms,
)

N = 100_000


@pytest.fixture(scope="module")
def big_batch():
    return equilibrium_batch(2024, 0, N, 1.0, setting_key("test"))


def test_disk_point_ranges():
    DiskPoint(0.0, 0.0)
    for r, th in [(1.0, 0.0), (-0.1, 0.0), (0.5, 2 * math.pi), (0.5, -0.1)]:
        with pytest.raises(ValueError):
            DiskPoint(r, th)


def test_disk_examples():
    a, b = disk_to_positions(DiskPoint(1 - math.exp(-0.5), 0.0), 1.0)
    assert a == pytest.approx(1.0, rel=1e-15) and b == 0.0
    a, b = disk_to_positions(DiskPoint(0.0, 1.0), 1.0)
    assert (a, b) == (0.0, 0.0)
    p = positions_to_disk(2.0, 0.0, 2.0)
    assert p.r == pytest.approx(1 - math.exp(-0.5), rel=1e-15) and p.theta == 0.0
    assert positions_to_disk(0.0, 0.0, 1.0) == DiskPoint(0.0, 0.0)


def test_r_one_rejected():
    with pytest.raises(ValueError):
        disk_to_positions((np.array([1.0]), np.array([0.0])), 1.0)


@given(st.floats(1e-9, 0.999999), st.floats(0, 2 * math.pi, exclude_max=True), st.floats(0.1, 10))
def test_bijection(r, theta, s0):
    p = DiskPoint(r, theta)
    q = positions_to_disk(*disk_to_positions(p, s0), s0)
    assert q.r == pytest.approx(r, rel=1e-12)
    # theta is only defined mod 2 pi
    d = (q.theta - theta + math.pi) % (2 * math.pi) - math.pi
    assert abs(d) <= 1e-12 * max(1.0, theta)


def test_bijection_batch(rng):
    r = rng.uniform(0, 0.999, 1000)
    th = rng.uniform(0, 2 * np.pi, 1000)
    r2, th2 = positions_to_disk(*disk_to_positions((r, th), 1.3), 1.3)
    np.testing.assert_allclose(r2, r, rtol=1e-12)
    np.testing.assert_allclose(np.cos(th2), np.cos(th), atol=1e-12)
    np.testing.assert_allclose(np.sin(th2), np.sin(th), atol=1e-12)
    za, zb = rng.normal(size=(2, 1000))
    np.testing.assert_allclose(disk_to_positions(positions_to_disk(za, zb, 1.3), 1.3), (za, zb), rtol=1e-10, atol=1e-12)


def test_same_stream_same_draws():
    a = sample_disk(SeededRng(5, 17))
    b = sample_disk(SeededRng(5, 17))
    assert a == b
    assert sample_disk(SeededRng(5, 18)) != a
    assert sample_disk(SeededRng(6, 17)) != a
    assert sample_disk(SeededRng(5, 17, setting_key("x"))) != a


def test_streams_independent_of_chunking():
    whole = stream_uniforms(9, 0, 1000, setting_key("a", 0.5))
    parts = np.vstack([stream_uniforms(9, s, 250, setting_key("a", 0.5)) for s in range(0, 1000, 250)])
    np.testing.assert_array_equal(whole, parts)
    single = np.array([SeededRng(9, i, setting_key("a", 0.5)).uniforms() for i in (0, 499, 999)])
    np.testing.assert_array_equal(single, whole[[0, 499, 999]])


def test_setting_key_distinguishes_floats():
    assert setting_key("g", 0.5) != setting_key("g", 0.5000000001)
    assert setting_key("g", 0.5) == setting_key("g", 0.5)
    assert setting_key("g", 1) != setting_key("g", 1.0)


def test_sample_pair_matches_batch():
    _, _, za, zb = equilibrium_batch(3, 40, 1, 2.0)
    assert sample_pair(SeededRng(3, 40), 2.0) == (za[0], zb[0])


def test_disk_statistics(big_batch):
    r, theta, _, _ = big_batch
    assert abs(r.mean() - 0.5) < 0.005
    counts, _ = np.histogram(theta, bins=16, range=(0, 2 * np.pi))
    assert stats.chisquare(counts).pvalue > 0.001
    assert np.all((r >= 0) & (r < 1)) and np.all((theta >= 0) & (theta < 2 * np.pi))


def test_position_moments(big_batch):
    _, _, za, zb = big_batch
    assert abs(za.var() - 1.0) < 3 * math.sqrt(2 / N)
    assert abs(np.corrcoef(za, zb)[0, 1]) < 0.01


def test_rayleigh_radius(big_batch):
    _, _, za, zb = big_batch
    radius = np.hypot(za, zb)
    assert stats.kstest(radius, lambda x: 1 - np.exp(-(x**2) / 2)).pvalue > 0.001


def test_gaussian_grid_chi_square(big_batch):
    _, _, za, zb = big_batch
    edges = np.array([-np.inf, -1.5, -0.9, -0.4, 0, 0.4, 0.9, 1.5, np.inf])
    counts, _, _ = np.histogram2d(za, zb, bins=[edges, edges])
    # isotropic unit Gaussian: cell probability is a product of 1D masses
    mass = np.diff(stats.norm.cdf(edges))
    expected = N * np.outer(mass, mass)
    assert stats.chisquare(counts.ravel(), expected.ravel()).pvalue > 0.001


def test_stream_pairwise_correlation(big_batch):
    r, theta, _, _ = big_batch
    assert abs(np.corrcoef(r[:-1], r[1:])[0, 1]) < 4 / math.sqrt(N)
    assert abs(np.corrcoef(r, theta)[0, 1]) < 4 / math.sqrt(N)


def test_single_particle_sampler():
    z = single_equilibrium_batch(1, 0, 20000, 1.5)
    assert np.all(np.isfinite(z))
    assert stats.kstest(z / 1.5, "norm").pvalue > 0.001
