from pathlib import Path

# resolve project root assuming this file lives in cprsutils/paths.py
PROJECT_ROOT = Path(__file__).resolve().parent.parent

# top-level outputs
OUTPUT_ROOT = PROJECT_ROOT / "outputs"

OUTPUT_EXPERIMENTS = OUTPUT_ROOT / "experiments"
OUTPUT_SNAPSHOTS = OUTPUT_ROOT / "snapshots"

# experiment files shipped with the repo
SPECS_ROOT = PROJECT_ROOT / "specs"


def experiment_path(kind: str, spec_hash: str, base: str | Path | None = None) -> Path:
    """<base>/<kind>-<first 12 hex digits of the spec hash>; base defaults to OUTPUT_EXPERIMENTS."""
    return Path(base or OUTPUT_EXPERIMENTS) / f"{kind}-{spec_hash[:12]}"


def snapshot_path(profile: str, N: int, seed: int, replica: int = 0) -> Path:
    # profile names carry ':' separators
    return OUTPUT_SNAPSHOTS / f"{profile.replace(':', '_')}__N{N}__s{seed}_{replica}.txt"


def ensure_dirs():
    dirs = [
        OUTPUT_ROOT,
        OUTPUT_EXPERIMENTS,
        OUTPUT_SNAPSHOTS,
    ]

    for d in dirs:
        d.mkdir(parents=True, exist_ok=True)
