import json
import random

import pytest

from iwasawalab import cli
from iwasawalab.precision_core import PrecisionBudget, TruncatedSeries
from iwasawalab.pgroup import build_unitriangular
from iwasawalab.families import brauer_family
from iwasawalab.k1_norms import LocalizedUnit, theta_tuple_localized
from iwasawalab.patching import random_unit, tuple_to_text


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr().out
    return code, (json.loads(out) if out.strip().startswith("{") else out)


def test_group_info(capsys):
    code, doc = run(capsys, "group-info", "--unitriangular", "2", "--p", "3")
    assert code == 0
    assert doc["group"]["order"] == 27
    assert not doc["group"]["abelian"]


def test_verify_suites_pass(capsys):
    for suite in ("additive", "log"):
        code, doc = run(capsys, "verify", suite, "--trials", "2", "--seed", "1")
        assert code == 0
        assert doc["verdict"] == "pass"
        assert doc["checks"]


def test_verify_zero_trials_warns(capsys):
    code, doc = run(capsys, "verify", "additive", "--trials", "0")
    assert code == 0
    assert doc["warnings"]
    assert doc["checks"] == []


def test_reports_are_deterministic(capsys):
    _, a = run(capsys, "verify", "additive", "--trials", "3", "--seed", "7")
    _, b = run(capsys, "verify", "additive", "--trials", "3", "--seed", "7")
    assert a == b


def test_group_file_roundtrip(tmp_path, capsys):
    g = build_unitriangular(2, 3)
    lines = ["group-v1", "p 3", f"name {g.name}", "table"]
    for r in range(g.order):
        lines.append(" ".join(str(g.mul(r, c)) for c in range(g.order)))
    path = tmp_path / "g.grp"
    path.write_text("\n".join(lines) + "\n")
    code, doc = run(capsys, "group-info", "--group", str(path))
    assert code == 0
    assert doc["group"]["order"] == 27


def test_bad_group_file_is_input_error(tmp_path, capsys):
    path = tmp_path / "bad.grp"
    path.write_text("group-v9\np 3\n")
    assert cli.main(["group-info", "--group", str(path)]) == cli.EXIT_INPUT
    assert cli.main(["group-info", "--group", str(tmp_path / "nope")]) \
        == cli.EXIT_INPUT


def test_patch_command(tmp_path, capsys):
    b = PrecisionBudget(3, 6, 8, 4)
    g = build_unitriangular(2, 3)
    fb = brauer_family(g)
    rng = random.Random(7)
    x, u = random_unit(g, b, rng), random_unit(g, b, rng)
    den = TruncatedSeries.from_coeffs(b, [3, 1])
    fp = tmp_path / "f.txt"
    xp = tmp_path / "xi.txt"
    fp.write_text(tuple_to_text(theta_tuple_localized(LocalizedUnit(x, den), fb)))
    xp.write_text(tuple_to_text(theta_tuple_localized(LocalizedUnit(x * u, den), fb)))
    out = tmp_path / "patched.txt"
    code, doc = run(capsys, "patch", str(fp), str(xp), "--out", str(out))
    assert code == 0
    assert doc["verdict"] == "pass"
    assert out.exists()


def test_orbital_command(capsys):
    code, doc = run(capsys, "orbital", "--level", "2")
    assert code == 0
    assert doc["verdict"] == "pass"
    assert len(doc["checks"]) > 100
