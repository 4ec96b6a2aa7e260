import filecmp
from pathlib import Path

import pytest

from ccom.cli import main
from ccom.config import ConfigInvalid, loads_config, parse_seeds, validate

ROOT = Path(__file__).resolve().parents[1]

TINY = """
[run]
protocol = {protocol}
seeds = 0-1
horizon_rounds = 300

[protocol]
n0 = 100
alpha = {alpha}

[puzzle]
mu = 4096

[churn]
n_ids = 110
min_population = 100
horizon_s = 1500

[adversary]
strategy = steady
rate = 0.5
"""


def tiny(tmp_path, name="a.ini", protocol="ccom", alpha="1/6"):
    path = tmp_path / name
    path.write_text(TINY.format(protocol=protocol, alpha=alpha))
    return str(path)


def test_alpha_bound():
    with pytest.raises(ConfigInvalid) as exc:
        validate(loads_config(TINY.format(protocol="ccom", alpha="0.3")))
    assert exc.value.field == "alpha"


def test_alpha_bound_with_latency():
    text = TINY.format(protocol="ccom", alpha="1/16").replace("[protocol]", "[protocol]\ndelta_rounds = 1")
    assert validate(loads_config(text)).alpha == pytest.approx(1 / 16)
    with pytest.raises(ConfigInvalid):
        validate(loads_config(text.replace("1/16", "0.07")))


def test_unknown_key_rejected():
    with pytest.raises(ConfigInvalid):
        loads_config(TINY.format(protocol="ccom", alpha="1/6").replace("[protocol]", "[protocol]\nbogus = 1"))


def test_seed_lists():
    assert parse_seeds("0-3") == (0, 1, 2, 3)
    assert parse_seeds("1,4") == (1, 4)


@pytest.mark.parametrize("name", sorted(p.name for p in (ROOT / "configs").glob("*.ini")))
def test_shipped_configs_validate(name):
    assert main(["validate", str(ROOT / "configs" / name)]) == 0


def test_exit_codes(tmp_path):
    assert main(["run", tiny(tmp_path), "--out", str(tmp_path / "o")]) == 0
    assert main(["run", tiny(tmp_path, "bad.ini", alpha="0.3"), "--out", str(tmp_path / "x")]) == 2
    assert main(["run", str(tmp_path / "missing.ini")]) == 2


def test_run_writes_per_seed_outputs(tmp_path):
    main(["run", tiny(tmp_path), "--out", str(tmp_path / "o")])
    names = {p.name for p in (tmp_path / "o").iterdir()}
    assert {"summary.csv", "seed0_timeline.csv", "seed1_ledger.csv"} <= names


def test_byte_identical_reruns(tmp_path):
    cfg = tiny(tmp_path)
    for out in ("r1", "r2"):
        assert main(["run", cfg, "--out", str(tmp_path / out)]) == 0
    files = sorted(p.name for p in (tmp_path / "r1").iterdir())
    match, mismatch, errors = filecmp.cmpfiles(tmp_path / "r1", tmp_path / "r2", files, shallow=False)
    assert not mismatch and not errors and len(match) == len(files)


def test_compare_identical_configs(tmp_path, capsys):
    a = tiny(tmp_path, "a.ini")
    assert main(["compare", a, a, "--out", str(tmp_path / "c")]) == 0
    assert "mean performance_pct=0.000" in capsys.readouterr().out


def test_compare_needs_matching_seeds(tmp_path):
    a = tiny(tmp_path, "a.ini")
    b = tmp_path / "b.ini"
    b.write_text(Path(a).read_text().replace("seeds = 0-1", "seeds = 5"))
    assert main(["compare", a, str(b), "--out", str(tmp_path / "c")]) == 2


def test_sybilcontrol_and_eccom_run(tmp_path):
    for proto in ("sybilcontrol", "eccom"):
        assert main(["run", tiny(tmp_path, f"{proto}.ini", protocol=proto), "--seeds", "0",
                     "--out", str(tmp_path / proto)]) == 0
