import os

import numpy as np
import pytest

from beltrami_decomp import formats
from beltrami_decomp.cli import main, spec_from_mapping
from beltrami_decomp.errors import FormatError

SPEC = """\
# tiny circle
grid = 32x32
cycle_length = 8
cycles = 3
perturbed = 1
base_radius = 4
amplitude = 4
inner_margin = 2
outer_margin = 2
bump_frames = 2, 5
bump_halfwidth = 2
bump_amplitude = 1
seed = 3
"""


@pytest.fixture
def spec_file(tmp_path):
    p = tmp_path / "spec.cfg"
    p.write_text(SPEC)
    return p


def test_spec_mapping():
    spec = spec_from_mapping({"grid": "80x70", "perturbed": "0, 2", "bump_angle": "1.5", "preset": "desk"})
    assert (spec.m, spec.n, spec.perturbed_cycles, spec.bump_angle) == (80, 70, (0, 2), 1.5)
    assert spec_from_mapping({"preset": "large"}).n_frames == 432
    with pytest.raises(FormatError):
        spec_from_mapping({"colour": "red"})
    with pytest.raises(FormatError):
        spec_from_mapping({"cycles": "many"})


def test_stepwise_commands(tmp_path, spec_file, capsys):
    ds, d, r = (str(tmp_path / x) for x in ("ds", "d", "r"))
    assert main(["synth", str(spec_file), "--out-dir", ds]) == 0
    assert len(os.listdir(os.path.join(ds, "frames"))) == 24
    assert main(["describe", os.path.join(ds, "maps.cmx"), "--out-dir", d]) == 0
    assert formats.read_matrix(os.path.join(d, "descriptor.cmx")).shape == (2 * 31 * 31, 24)
    assert main(["decompose", os.path.join(d, "descriptor.cmx"), "--out-dir", d, "--beta-cap", "30"]) == 0
    assert formats.read_history(os.path.join(d, "history.csv"))
    assert main(["reconstruct", os.path.join(d, "A.cmx"), "--reference",
                 os.path.join(ds, "frames", "0000.pgm"), "--out-dir", r]) == 0
    assert len(formats.read_frames(os.path.join(r, "frames"))) == 24
    capsys.readouterr()
    assert main(["report", d]) == 0
    out = capsys.readouterr().out
    assert "low-rank rank" in out and "sparse energy inside" in out
    assert os.path.isfile(os.path.join(d, "report.csv"))


def test_pipeline_from_spec_and_dataset(tmp_path, spec_file, capsys):
    ds = str(tmp_path / "ds")
    main(["synth", str(spec_file), "--out-dir", ds])
    assert main(["pipeline", ds, "--out-dir", str(tmp_path / "p1")]) == 0
    assert main(["pipeline", str(spec_file), "--out-dir", str(tmp_path / "p2")]) == 0
    a = (tmp_path / "p1" / "report.txt").read_text()
    assert a == (tmp_path / "p2" / "report.txt").read_text()
    assert main(["pipeline", ds, "--descriptor-kind", "displacement", "--out-dir", str(tmp_path / "p3")]) == 0
    assert "descriptor kind      : displacement" in (tmp_path / "p3" / "report.txt").read_text()


def test_pipeline_from_maps_file(tmp_path, spec_file):
    ds = str(tmp_path / "ds")
    main(["synth", str(spec_file), "--out-dir", ds])
    maps = os.path.join(ds, "maps.cmx")
    ref = os.path.join(ds, "frames", "0000.pgm")
    assert main(["pipeline", maps, "--out-dir", str(tmp_path / "p"), "--reference", ref,
                 "--alpha", "0.05", "--tol", "1e-6", "--max-iters", "200", "--rank-tol", "1e-6"]) == 0
    assert "alpha                : 0.05" in (tmp_path / "p" / "report.txt").read_text()


def test_errors_exit_nonzero(tmp_path, capsys):
    bad = tmp_path / "bad.cmx"
    bad.write_bytes(b"nope")
    assert main(["decompose", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err
    formats.write_matrix(tmp_path / "m.cmx", np.zeros((16, 1), complex))
    assert main(["describe", str(tmp_path / "m.cmx"), "--out-dir", str(tmp_path)]) == 1
    assert "--grid" in capsys.readouterr().err
    with pytest.raises(SystemExit):
        main(["pipeline", "x", "--descriptor-kind", "optical"])


def test_seed_flag_changes_data(tmp_path, spec_file):
    a, b = str(tmp_path / "a"), str(tmp_path / "b")
    main(["synth", str(spec_file), "--out-dir", a])
    main(["synth", str(spec_file), "--out-dir", b, "--seed", "11"])
    assert formats.read_matrix(os.path.join(a, "maps.cmx")).tobytes() != \
        formats.read_matrix(os.path.join(b, "maps.cmx")).tobytes()
