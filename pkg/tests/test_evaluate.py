import csv
import logging
import numpy as np
import pytest
from PIL import Image
from arenvq.aren import AttentiveVQVAE
from arenvq.degrade import DegradeSpec
from arenvq.errors import ContractError, DataError
from arenvq.evaluate import (compatibility_problems, evaluate_sweep, grid_name, restore_image,
    write_metrics, write_restoration)
from arenvq.metrics import CSV_HEADER
from conftest import tiny_run_config


@pytest.fixture
def mask_config(tmp_path):
    config = tiny_run_config(tmp_path)
    config.task.kind = "mask"
    return config


def test_grid_names():
    assert grid_name("blur", "(1,3)") == "grid_blur_1-3.png"
    assert grid_name("mask", "30") == "grid_mask_30.png"
    assert grid_name("none", "clean") == "grid_none_clean.png"


def test_mask_sweep(tmp_path, mask_config, images):
    model = AttentiveVQVAE.from_run_config(mask_config)
    reports = evaluate_sweep(model, images, mask_config.task.degrade_spec(), True, 0.25,
        output_dir=str(tmp_path), batch_size=1, grid_images=4)
    assert [r.param for r in reports] == ["30", "40", "50", "60", "70"]
    assert all(r.n_images == 2 for r in reports)
    assert all(len(r.active) == 1 and r.active[0] >= 1 for r in reports)
    for label in ("30", "70"):
        with Image.open(str(tmp_path / grid_name("mask", label))) as grid:
            assert grid.size == (3 * 16 + 4, 2 * 16 + 2)


def test_blur_and_clean_sweeps(tmp_path, images):
    config = tiny_run_config(tmp_path)
    model = AttentiveVQVAE.from_run_config(config)
    reports = evaluate_sweep(model, images, DegradeSpec("blur"), False, 0.25)
    assert [r.param for r in reports] == ["(1,3)", "(1,5)", "(1,8)"]
    reports = evaluate_sweep(model, images, DegradeSpec(), False, 0.25)
    assert [(r.task, r.param) for r in reports] == [("none", "clean")]


def test_empty_test_split(mask_config):
    model = AttentiveVQVAE.from_run_config(mask_config)
    with pytest.raises(DataError):
        evaluate_sweep(model, np.zeros((0, 16, 16, 3)), DegradeSpec("mask"), True, 0.25)


def test_write_metrics(tmp_path, images):
    model = AttentiveVQVAE.from_run_config(tiny_run_config(tmp_path))
    reports = evaluate_sweep(model, images, DegradeSpec("noise"), False, 0.25)
    path = str(tmp_path / "metrics.csv")
    write_metrics(reports, path)
    with open(path) as f:
        rows = list(csv.reader(f))
    assert rows[0] == CSV_HEADER
    assert [row[1] for row in rows[1:]] == ["0.2", "0.3", "0.4"]
    assert all(row[0] == "noise" and row[5] == "2" for row in rows[1:])


def test_compatibility(tmp_path, mask_config):
    config = tiny_run_config(tmp_path)
    assert compatibility_problems(config, tiny_run_config(tmp_path)) == []
    other = tiny_run_config(tmp_path, levels=2)
    assert any("levels" in p for p in compatibility_problems(config, other))
    assert any("input channels" in p for p in compatibility_problems(config, mask_config))
    other = tiny_run_config(tmp_path)
    other.data.resolution = 32
    assert len(compatibility_problems(config, other)) == 1


def _write_image(path, size, rng):
    Image.fromarray(rng.integers(0, 256, size=(size, size, 3), dtype=np.uint8)).save(str(path))
    return str(path)


def test_restore_resizes_and_writes(tmp_path, rng, caplog):
    config = tiny_run_config(tmp_path)
    model = AttentiveVQVAE.from_run_config(config)
    source = _write_image(tmp_path / "in.png", 20, rng)
    with caplog.at_level(logging.WARNING, logger="arenvq"):
        img, recon = restore_image(model, config, source)
    assert "Resizing" in caplog.text
    assert img.shape == recon.shape == (16, 16, 3)
    output, grid = write_restoration(img, recon, str(tmp_path / "out.png"))
    with Image.open(output) as image:
        assert image.size == (16, 16)
    with Image.open(grid) as image:
        assert image.size == (34, 16)
    assert grid.endswith("out_grid.png")


def test_restore_with_mask(tmp_path, rng, mask_config):
    model = AttentiveVQVAE.from_run_config(mask_config)
    source = _write_image(tmp_path / "in.png", 16, rng)
    with pytest.raises(ContractError):
        restore_image(model, mask_config, source)
    mask = np.full((16, 16), 255, dtype=np.uint8)
    mask[4:8] = 0
    Image.fromarray(mask).save(str(tmp_path / "mask.png"))
    _, recon = restore_image(model, mask_config, source, str(tmp_path / "mask.png"))
    assert recon.shape == (16, 16, 3)


def test_restore_unreadable_image(tmp_path):
    config = tiny_run_config(tmp_path)
    model = AttentiveVQVAE.from_run_config(config)
    (tmp_path / "junk.png").write_bytes(b"junk")
    with pytest.raises(DataError):
        restore_image(model, config, str(tmp_path / "junk.png"))
