import math
import os
import numpy as np
import pandas as pd
import pytest

from ssat_cbf import cli
from ssat_cbf.geometry import Cuboid

SCENES = os.path.join(os.path.dirname(__file__), os.pardir, "scripts", "scenes")


def test_random_cuboids_ranges(rng):
    boxes = cli.random_cuboids(rng, 50)
    centers = np.array([box.center for box in boxes])
    extents = np.array([box.half_extents for box in boxes])
    assert np.all(np.abs(centers) <= 2.0)
    assert np.all((extents >= 0.05) & (extents <= 1.0))
    for box in boxes[:5]:
        np.testing.assert_allclose(box.rotation @ box.rotation.T, np.eye(3), atol=1e-12)


def test_convexity_witness():
    angles = np.linspace(0.0, 2.0 * math.pi, 64, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=1)
    assert cli.convexity_witness(circle) is None
    star_angles = np.linspace(0.0, 2.0 * math.pi, 10, endpoint=False)
    radius = np.where(np.arange(10) % 2 == 0, 1.0, 0.4)
    star = radius[:, None] * np.stack([np.cos(star_angles), np.sin(star_angles)], axis=1)
    witness = cli.convexity_witness(star)
    assert witness is not None
    assert witness.depth > 0
    assert (witness.i, witness.j) == (0, 2)


def test_sat_sweep_matches_minkowski_boundary():
    frame = cli.boundary_sweep(alphas=(), n_directions=24)
    assert set(frame["method"]) == {"SAT"}
    A = Cuboid.from_pose([0.0, 0.0, 0.0], [0.5, 0.5, 0.5])
    B = Cuboid.from_pose([0.0, 0.0, 0.0], [0.5, 0.25, 0.25], yaw=math.radians(10.0))
    exact = cli.minkowski_boundary(A, B, frame["angle"].to_numpy())
    np.testing.assert_allclose(frame[["x", "y"]].to_numpy(), exact, atol=1e-6)
    assert cli.convexity_witness(exact) is None


def test_sweep_command_writes_tables(tmp_path):
    out = tmp_path / "sweep"
    assert cli.main(["sweep", "--alphas", "50", "--directions", "36", "--out", str(out)]) == 0
    frame = pd.read_csv(out / "sweep.csv")
    assert set(frame["method"]) == {"SAT", "SSAT-LSE", "SSAT-Boltzmann"}
    assert len(frame) == 3 * 36
    witness = pd.read_csv(out / "witness.csv")
    assert len(witness) == 3
    assert bool(witness.loc[witness["method"] == "SAT", "convex"].item())


def test_bench_collision_small():
    report, ratios = cli.bench_collision(seed=1, N=300, lp_samples=50)
    assert list(report.index) == ["SAT", *cli.SSAT_VARIANTS, "GJK", "LP"]
    assert report.loc["LP", "n"] == 50
    assert report.loc["SAT", "n"] == 300
    assert np.isnan(report.loc["SAT", "diff_median_us"])
    assert report.loc["SSAT(LSE+xtanh)", "diff_median_us"] >= 0
    assert ratios["baseline_us"] >= 0
    assert ratios["lp_over_ssat"] > 0


def test_bench_command(tmp_path, capsys):
    assert cli.main(["bench", "--n", "250", "--lp-samples", "20", "--csv", "--out", str(tmp_path)]) == 0
    assert (tmp_path / "bench.csv").exists()
    assert (tmp_path / "ratios.csv").exists()
    assert "median_us" in capsys.readouterr().out


def test_bench_and_sweep_read_config_files(tmp_path):
    bench_config = tmp_path / "bench.yml"
    bench_config.write_text(
        "name: CollisionTiming\nprogram: scripts/collision_timing.py\nmethod: grid\nparameters:\n"
        "  seed:\n    values: [3]\n  num_pairs:\n    values: [120]\n  lp_samples:\n    values: [15]\n"
    )
    assert cli.main(["bench", "--config", str(bench_config), "--out", str(tmp_path / "bench")]) == 0
    report = pd.read_csv(tmp_path / "bench" / "bench.csv", index_col="method")
    assert report.loc["SAT", "n"] == 120
    assert report.loc["LP", "n"] == 15
    assert cli.main(["bench", "--config", str(bench_config), "--n", "60", "--out", str(tmp_path / "override")]) == 0
    assert pd.read_csv(tmp_path / "override" / "bench.csv", index_col="method").loc["SAT", "n"] == 60

    sweep_config = tmp_path / "sweep.yml"
    sweep_config.write_text("alpha: 40.0\nnum_directions: 24\n")
    assert cli.main(["sweep", "--config", str(sweep_config), "--out", str(tmp_path / "sweep")]) == 0
    frame = pd.read_csv(tmp_path / "sweep" / "sweep.csv")
    assert len(frame) == 3 * 24
    assert set(frame["alpha"].dropna()) == {40.0}


def test_timing_synthetic_load(tmp_path):
    assert cli.main(["timing", "--n", "3", "--out", str(tmp_path)]) == 0
    frame = pd.read_csv(tmp_path / "timing.csv")
    assert len(frame) == 3
    assert (frame["rows"] == 269).all()
    assert (frame["rows_joint_limit"] == 24).all()
    stages = frame[["assembly_us", "solve_us", "tick_us"]].to_numpy()
    assert np.all(np.isfinite(stages)) and np.all(stages > 0)
    np.testing.assert_allclose(frame["tick_us"], frame["assembly_us"] + frame["solve_us"])


def test_episode_command(tmp_path):
    argv = ["episode", "--scene", os.path.join(SCENES, "flat.json"), "--duration", "0.1", "--out", str(tmp_path)]
    assert cli.main(argv) == 0
    assert len(pd.read_csv(tmp_path / "episode_episode.csv")) == 100
    summary = pd.read_csv(tmp_path / "summary.csv")
    assert summary.loc[0, "violations"] == 0


def test_usage_errors(tmp_path, capsys):
    with pytest.raises(SystemExit) as info:
        cli.main([])
    assert info.value.code == 2
    assert cli.main(["episode", "--out", str(tmp_path)]) == 1
    assert "needs --scene" in capsys.readouterr().err
    assert cli.main(["episode", "--scene", str(tmp_path / "missing.json"), "--out", str(tmp_path)]) == 1


@pytest.mark.slow
def test_boltzmann_boundary_is_not_convex():
    frame = cli.boundary_sweep(alphas=(20.0,), n_directions=360)
    boundaries = {method: group[["x", "y"]].dropna().to_numpy() for method, group in frame.groupby("method")}
    assert cli.convexity_witness(boundaries["SSAT-Boltzmann"]) is not None
    assert cli.convexity_witness(boundaries["SSAT-LSE"]) is None


@pytest.mark.slow
def test_ssat_beats_lp_and_sat_beats_ssat():
    report, ratios = cli.bench_collision(seed=0, N=5000, lp_samples=500)
    assert ratios["lp_over_ssat"] > 1
    assert ratios["lp_over_ssat_diff"] > 1
    assert report.loc["SAT", "median_us"] <= report.loc["SSAT(LSE+xtanh)", "median_us"]


def test_setup_lists_every_subpackage():
    root = os.path.join(os.path.dirname(__file__), os.pardir)
    with open(os.path.join(root, "setup.py")) as stream:
        setup_text = stream.read()
    for path, _, files in os.walk(os.path.join(root, "ssat_cbf")):
        if "__init__.py" in files:
            name = os.path.relpath(path, root).replace(os.sep, ".")
            assert f'"{name}"' in setup_text
