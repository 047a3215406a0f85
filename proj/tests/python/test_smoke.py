"""Smoke tests for the panoqa extension module."""

import math

import numpy as np
import pytest

import panoqa


def smooth_image(seed: int, h: int = 64, w: int = 128) -> np.ndarray:
    rng = np.random.default_rng(seed)
    yy, xx = np.mgrid[0:h, 0:w]
    img = np.zeros((h, w, 3))
    for c in range(3):
        img[..., c] = (
            0.5
            + 0.25 * np.sin(xx / w * 6.283 * (c + 2))
            + 0.2 * np.cos(yy / h * 6.283 * (c + 3))
        )
    img += 0.02 * rng.standard_normal(img.shape)
    return np.clip(img, 0.0, 1.0)


def test_dwt_roundtrip_and_parseval():
    rng = np.random.default_rng(0)
    plane = rng.random((32, 32))
    (level,) = panoqa.dwt2(plane, levels=1)
    rec = panoqa.iwt2(level["ll"], level["lh"], level["hl"], level["hh"])
    assert np.max(np.abs(rec - plane)) < 1e-9
    energy_bands = sum(
        float(np.sum(level[b] ** 2)) for b in ("ll", "lh", "hl", "hh")
    )
    assert math.isclose(energy_bands, float(np.sum(plane**2)), rel_tol=1e-9)


def test_dwt_hand_example():
    (level,) = panoqa.dwt2(np.array([[1.0, 2.0], [3.0, 4.0]]), levels=1)
    assert level["ll"][0, 0] == pytest.approx(5.0)
    assert level["lh"][0, 0] == pytest.approx(-1.0)
    assert level["hl"][0, 0] == pytest.approx(-2.0)
    assert level["hh"][0, 0] == pytest.approx(0.0)


def test_metrics_basics():
    a = smooth_image(1)
    assert math.isinf(panoqa.psnr(a, a))
    assert panoqa.ssim(a, a) == pytest.approx(1.0)
    b = np.clip(a + 1.0 / 255.0, 0.0, 1.0)
    # uniform offset away from clipping: rebuild exactly
    a = np.full((64, 128, 3), 0.4)
    b = a + 1.0 / 255.0
    expected = 20.0 * math.log10(255.0)
    assert panoqa.psnr(a, b) == pytest.approx(expected, rel=1e-9)
    assert panoqa.s_psnr(a, b, points=5000) == pytest.approx(expected, rel=1e-6)
    assert panoqa.cpp_psnr(a, b) == pytest.approx(expected, rel=1e-6)


def test_jpeg_roundtrip_rate_distortion():
    img = smooth_image(2)
    q5 = panoqa.jpeg_roundtrip(img, 5)
    q60 = panoqa.jpeg_roundtrip(img, 60)
    assert q5.shape == img.shape
    assert np.mean((img - q5) ** 2) >= np.mean((img - q60) ** 2)


def test_correlation_against_scipy():
    scipy_stats = pytest.importorskip("scipy.stats")
    rng = np.random.default_rng(3)
    x = rng.random(80) * 40
    y = np.clip(2.0 * x + rng.normal(0, 6, 80) + 10, 0, 100)
    rep = panoqa.correlation_report(x, y, "smoke")
    assert rep["srocc"] == pytest.approx(scipy_stats.spearmanr(x, y).statistic, abs=1e-9)
    assert rep["krocc"] == pytest.approx(scipy_stats.kendalltau(x, y).statistic, abs=1e-9)
    assert rep["rmse"] >= 0.0 and -1.0 <= rep["plcc"] <= 1.0


def test_logistic_fit_recovers_planted_curve():
    x = np.linspace(0, 100, 50)
    y = 10 + (90 - 10) / (1 + np.exp(-(x - 50) / 8))
    fit = panoqa.fit_logistic(x, y)
    assert fit["b1"] == pytest.approx(90, rel=0.01)
    assert fit["b4"] == pytest.approx(8, rel=0.01)


def test_reproject_masks_and_identity():
    img = smooth_image(4)
    out, mask = panoqa.reproject(img, "ERP", "ERP", 128, 64)
    assert np.max(np.abs(out - img)) < 1e-9
    assert mask.all()
    cpp, cpp_mask = panoqa.reproject(img, "ERP", "CPP", 128, 64)
    assert not cpp_mask.all()  # parabola corners are outside
    assert cpp_mask.any()


def test_fibonacci_grid_balance():
    grid = panoqa.fibonacci_grid(1000)
    assert grid.shape == (1000, 2)
    frac_north = float(np.mean(grid[:, 0] > 0))
    assert 0.48 <= frac_north <= 0.52


def test_compute_dmos():
    records = []
    for s in range(5):
        records.append((f"s{s}", "ref", 90.0))
        records.append((f"s{s}", "imp", 40.0))
    table = panoqa.compute_dmos(records, {"imp": "ref"})
    assert table["imp"]["dmos"] == pytest.approx(50.0)
    assert table["ref"]["dmos"] == 0.0
    assert table["ref"]["is_reference"]


def test_end_to_end_tiny_pipeline(tmp_path):
    sources = []
    for i in range(3):
        p = tmp_path / f"scene{i}.png"
        panoqa.save_png(smooth_image(10 + i), p)
        sources.append(str(p))
    manifest = panoqa.build_dataset(sources, str(tmp_path / "data"), 0.67, 7)
    assert (tmp_path / "data" / "manifest.json").exists()

    patches = panoqa.extract_patches(smooth_image(5), 32, mode="TILE_ALL")
    assert len(patches) == (64 // 32) * (128 // 32)
    losses = panoqa.energy_loss_report(
        [(smooth_image(6), panoqa.jpeg_roundtrip(smooth_image(6), 5), 5)],
        levels=2,
    )
    assert losses[5]["HH"] > losses[5]["LL"]
