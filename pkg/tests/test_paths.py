import cprsutils.paths as paths


def test_ensure_dirs_creates_expected_dirs(tmp_path, monkeypatch):
    monkeypatch.setattr(paths, "PROJECT_ROOT", tmp_path)
    monkeypatch.setattr(paths, "OUTPUT_ROOT", tmp_path / "outputs")
    monkeypatch.setattr(paths, "OUTPUT_EXPERIMENTS", paths.OUTPUT_ROOT / "experiments")
    monkeypatch.setattr(paths, "OUTPUT_SNAPSHOTS", paths.OUTPUT_ROOT / "snapshots")

    paths.ensure_dirs()
    paths.ensure_dirs()

    assert paths.OUTPUT_EXPERIMENTS.is_dir()
    assert paths.OUTPUT_SNAPSHOTS.is_dir()


def test_experiment_path(tmp_path, monkeypatch):
    monkeypatch.setattr(paths, "OUTPUT_EXPERIMENTS", tmp_path / "experiments")
    h = "0123456789abcdef" * 4
    assert paths.experiment_path("oracle-check", h) == tmp_path / "experiments" / "oracle-check-0123456789ab"
    assert paths.experiment_path("pde", h, tmp_path / "mine") == tmp_path / "mine" / "pde-0123456789ab"
    assert paths.experiment_path("pde", h, str(tmp_path)).parent == tmp_path


def test_snapshot_path(tmp_path, monkeypatch):
    monkeypatch.setattr(paths, "OUTPUT_SNAPSHOTS", tmp_path)
    p = paths.snapshot_path("sine:0.1:0.05:0.05", 16, 3, 2)
    assert p == tmp_path / "sine_0.1_0.05_0.05__N16__s3_2.txt"


def test_shipped_specs_live_next_to_the_package():
    assert paths.SPECS_ROOT.parent == paths.PROJECT_ROOT
    assert (paths.SPECS_ROOT / "pde_compare.spec").is_file()
