import json
import subprocess
import sys

import pytest

from gemengelab.cli import main
from gemengelab.scenario import PRESET_NAMES, preset_text

GOOD = """\
scenario cli-good
system 2 {
    observable pauli x
    state [1, 0]
}
apparatus 2 {
    pointer + [1, 0]
    pointer - [0, 1]
    initial [1, 0]
}
check probability-reproducibility
"""


@pytest.fixture
def scn(tmp_path):
    def write(text, name="case.scn"):
        path = tmp_path / name
        path.write_text(text)
        return str(path)
    return write


def test_list_presets(capsys):
    assert main(["--list-presets"]) == 0
    assert capsys.readouterr().out.split() == list(PRESET_NAMES)


def test_no_command_is_usage_error(capsys):
    assert main([]) == 2
    assert "usage" in capsys.readouterr().err


def test_run_passing_file(scn, capsys):
    assert main(["run", scn(GOOD)]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["scenario"] == "cli-good" and report["passed"]


def test_run_failing_check(scn, capsys):
    assert main(["run", scn(GOOD + "check criterion-b\n")]) == 1
    err = capsys.readouterr().err
    assert "criterion-b" in err


def test_run_parse_error_reports_position(scn, capsys):
    path = scn(GOOD.replace("state [1, 0]", "state [1, 0, 0]"))
    assert main(["run", path]) == 2
    err = capsys.readouterr().err
    assert err.startswith("gemengelab: error:") and "line 4, column 5" in err and path in err


@pytest.mark.parametrize("text", [GOOD + "check nonsense\n", GOOD.replace("}\ncheck", "\ncheck", 1) + "{\n"])
def test_run_invalid_files(scn, text):
    assert main(["run", scn(text)]) == 2


def test_run_missing_file(tmp_path):
    assert main(["run", str(tmp_path / "absent.scn")]) == 2


def test_run_several_files_gives_list(scn, capsys):
    a = scn(GOOD, "a.scn")
    b = scn(preset_text("no-go"), "b.scn")
    assert main(["run", a, b]) == 0
    reports = json.loads(capsys.readouterr().out)
    assert [r["scenario"] for r in reports] == ["cli-good", "no-go"]


def test_run_several_files_one_failing(scn):
    assert main(["run", scn(GOOD, "a.scn"), scn(GOOD + "check criterion-b\n", "b.scn")]) == 1


def test_preset_out_file(tmp_path, capsys):
    out = tmp_path / "report.json"
    assert main(["preset", "rule2-detector", "--out", str(out)]) == 0
    assert capsys.readouterr().out == ""
    assert json.loads(out.read_text())["scenario"] == "rule2-detector"


def test_preset_input_option(capsys):
    assert main(["preset", "stern-gerlach-I", "--input", "3-"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["results"]["apparatus"]["weights"] == pytest.approx([1.0])


def test_preset_input_on_non_spin_preset():
    assert main(["preset", "no-go", "--input", "1+"]) == 2


def test_unknown_preset_exits_two():
    with pytest.raises(SystemExit) as info:
        main(["preset", "nope"])
    assert info.value.code == 2


def test_tol_and_seed_overrides(capsys):
    assert main(["preset", "cluster-separability", "--tol", "eq=1e-9", "--tol", "rec=1e-7", "--seed", "3"]) == 0
    report = json.loads(capsys.readouterr().out)
    assert report["tolerances"]["eq"] == 1e-9 and report["tolerances"]["rec"] == 1e-7
    assert report["seed"] == 3


def test_bad_tol_values():
    with pytest.raises(SystemExit) as info:
        main(["preset", "no-go", "--tol", "eq"])
    assert info.value.code == 2
    with pytest.raises(SystemExit):
        main(["preset", "no-go", "--tol", "eq=small"])
    assert main(["preset", "no-go", "--tol", "wobble=1"]) == 2


def test_console_script_entry_point():
    proc = subprocess.run([sys.executable, "-m", "gemengelab.cli", "preset", "no-go"],
                          capture_output=True, text=True, check=False)
    assert proc.returncode == 0
    assert json.loads(proc.stdout)["passed"]
