import json
from fractions import Fraction

import pytest

from slopelab.cli import main
from slopelab.serialize import (
    canonical_json,
    function_from_descriptor,
    martingale_from_descriptor,
    source_from_descriptor,
    nested_test_from_descriptor,
)

F = Fraction


def write_config(tmp_path, name, payload):
    path = tmp_path / name
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


# ---------------------------------------------------------------------------
# Descriptors


def test_function_descriptor_round_trips():
    desc = {
        "kind": "sum",
        "of": [
            {"kind": "linear", "coeffs": ["2/1", "3/1"]},
            {"kind": "scale", "by": "1/2", "of": {"kind": "product"}},
        ],
    }
    f = function_from_descriptor(desc)
    assert f.eval((F(1, 2), F(1, 2))) == F(5, 2) + F(1, 8)
    with pytest.raises(ValueError):
        function_from_descriptor({"kind": "nope"})


def test_affine_descriptor_requires_isometry():
    desc = {
        "kind": "affine-compose",
        "matrix": [["3/5", "4/5"], ["4/5", "-3/5"]],
        "offset": ["0/1", "0/1"],
        "of": {"kind": "linear", "coeffs": ["2/1", "3/1"]},
    }
    g = function_from_descriptor(desc)
    assert g.eval((F(1, 4), F(0))) == F(1, 4) * F(18, 5)


def test_source_and_martingale_descriptors():
    src = source_from_descriptor({"kind": "interleave", "of": [
        {"kind": "pattern", "bits": "1", "repeat": True},
        {"kind": "constant", "bit": 0},
    ]})
    assert src.prefix(6) == (1, 0, 1, 0, 1, 0)
    mart = martingale_from_descriptor({"kind": "slope", "function": {"kind": "square"}})
    assert mart.at((1,)) == F(3, 2)
    with pytest.raises(ValueError):
        source_from_descriptor({"kind": "rational", "value": "1/2"})


def test_canonical_json_renders_fractions():
    text = canonical_json({"value": F(2, 6), "nested": [F(1, 2)]})
    data = json.loads(text)
    assert data == {"value": "1/3", "nested": ["1/2"]}


# ---------------------------------------------------------------------------
# Commands


def test_probe_command_reports_and_is_deterministic(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "probe.json",
        {
            "function": {"kind": "abs", "center": "1/2"},
            "points": [["1/2"]],
            "depth": 5,
            "separation_threshold": "1/2",
            "oscillation_threshold": "2/1",
        },
    )
    out1 = tmp_path / "r1.json"
    out2 = tmp_path / "r2.json"
    assert main(["probe", "--config", config, "--out", str(out1)]) == 0
    assert main(["probe", "--config", config, "--out", str(out2)]) == 0
    assert out1.read_bytes() == out2.read_bytes()
    report = json.loads(out1.read_text())
    point = report["results"][0]
    assert point["class_a"]["status"] == "violated"
    assert point["class_a"]["witness"]["upper"]["slope"] == "1/1"
    assert point["class_b"]["status"] == "violated"


def test_probe_command_linear_all_consistent(tmp_path):
    config = write_config(
        tmp_path,
        "probe.json",
        {
            "function": {"kind": "linear", "coeffs": ["2/1", "3/1"]},
            "points": [["1/2", "1/2"], ["1/3", "2/3"]],
            "depth": 4,
            "defect": {"u": ["1/1", "0/1"], "v": ["0/1", "1/1"], "max_step": "1/8"},
        },
    )
    out = tmp_path / "r.json"
    assert main(["probe", "--config", config, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    for entry in report["results"]:
        assert entry["class_a"]["status"] == "consistent-to-depth"
        assert entry["class_b"]["status"] == "consistent-to-depth"
        assert entry["defect"]["bracket"] == ["0/1", "0/1"]


def test_probe_command_usage_errors(tmp_path, capsys):
    missing = write_config(tmp_path, "bad.json", {"points": [["1/2"]]})
    assert main(["probe", "--config", missing]) == 2
    assert main(["probe", "--config", str(tmp_path / "absent.json")]) == 2
    with pytest.raises(SystemExit) as exc:
        main(["probe"])
    assert exc.value.code == 2


def test_bet_command_csv_and_json(tmp_path):
    config = write_config(
        tmp_path,
        "bet.json",
        {
            "martingale": {"kind": "slope", "function": {"kind": "square"}},
            "source": {"kind": "rational", "value": "1/3"},
            "depth": 16,
        },
    )
    out_csv = tmp_path / "run.csv"
    assert main(["bet", "--config", config, "--out", str(out_csv), "--format", "csv"]) == 0
    lines = out_csv.read_text().strip().splitlines()
    assert lines[0] == "length,capital"
    assert len(lines) == 18
    assert lines[1] == "0,1/1"
    # oracle: slope of x^2 over the 16-bit interval around 1/3 is a + b
    from slopelab.bits import bits_of_fraction, fraction_from_bits

    a = fraction_from_bits(bits_of_fraction(F(1, 3)).prefix(16))
    assert lines[17] == f"16,{(2 * a + F(1, 65536)).numerator}/65536"
    out_json = tmp_path / "run.json"
    assert main(["bet", "--config", config, "--out", str(out_json)]) == 0
    report = json.loads(out_json.read_text())
    assert len(report["trajectory"]) == 17


def test_bet_command_flat_for_constant(tmp_path):
    config = write_config(
        tmp_path,
        "bet.json",
        {
            "martingale": {"kind": "constant", "value": "1/1"},
            "source": {"kind": "pattern", "bits": "01"},
            "depth": 6,
        },
    )
    out = tmp_path / "flat.csv"
    assert main(["bet", "--config", config, "--out", str(out), "--format", "csv"]) == 0
    rows = out.read_text().strip().splitlines()[1:]
    assert all(row.endswith(",1/1") for row in rows)


def test_bet_command_aborts_on_corrupt_table(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "bet.json",
        {
            "martingale": {
                "kind": "table",
                "depth": 1,
                "values": {"": "1/1", "0": "1/3", "1": "1/1"},
            },
            "source": {"kind": "pattern", "bits": "0"},
            "depth": 4,
        },
    )
    assert main(["bet", "--config", config]) == 1
    assert "fairness" in capsys.readouterr().err


def test_tent_system_command(tmp_path):
    config = write_config(
        tmp_path,
        "tent.json",
        {
            "test": {"kind": "concentric", "point": ["1/3", "1/3"], "scale_step": 2},
            "depth": 4,
            "cutoff": 0,
            "budget": 4,
            "points": [["1/3", "1/3"]],
            "oscillation_stages": [3, 4],
            "precisions": [2, 3, 4],
            "modulus_pairs": 20,
        },
    )
    out = tmp_path / "tent.json.out"
    bundle = tmp_path / "bundle.json"
    code = main(
        ["tent-system", "--config", config, "--out", str(out), "--seed", "3", "--bundle", str(bundle)]
    )
    assert code == 0
    report = json.loads(out.read_text())
    assert report["failures"] == []
    assert all(rec["passed"] for rec in report["oscillation"])
    saved = json.loads(bundle.read_text())
    assert saved["format"] == "tent-system/1"


def test_tent_system_command_rejects_broken_nesting(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "tent.json",
        {
            "test": {
                "kind": "explicit",
                "stages": [
                    [{"dim": 2, "scale": 2, "corner": [1, 1]}],
                    [{"dim": 2, "scale": 1, "corner": [0, 0]}],
                ],
            },
            "depth": 1,
            "budget": 4,
        },
    )
    assert main(["tent-system", "--config", config]) == 1
    assert "nesting audit failed" in capsys.readouterr().err


def test_dore_maleva_command(tmp_path):
    config = write_config(tmp_path, "dm.json", {"stages": 3})
    out = tmp_path / "dm.out.json"
    assert main(["dore-maleva", "--config", config, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert [row["remaining"] for row in report["table"]] == ["5/9", "25/81", "125/729"]
    assert report["table"][0]["p_raw"] == "4/1"
    assert report["failures"] == []
    # byte-identical on re-run
    out2 = tmp_path / "dm2.out.json"
    assert main(["dore-maleva", "--config", config, "--out", str(out2)]) == 0
    assert out.read_bytes() == out2.read_bytes()


def test_dore_maleva_zero_stages(tmp_path):
    config = write_config(tmp_path, "dm.json", {"stages": 0, "geometry": False})
    out = tmp_path / "dm.out.json"
    assert main(["dore-maleva", "--config", config, "--out", str(out)]) == 0
    assert json.loads(out.read_text())["table"] == []


def test_tent_descriptor_loads():
    desc = {
        "kind": "tent",
        "cell": {"dim": 2, "scale": 0, "corner": [0, 0]},
        "stage": 0,
        "index": 1,
    }
    tent = function_from_descriptor(desc)
    assert tent.eval((F(1, 2), F(1, 2))) == F(1, 2)


def test_nested_test_descriptor_round_trips():
    desc = {"kind": "concentric", "point": ["1/3", "1/3"], "scale_step": 2}
    test = nested_test_from_descriptor(desc)
    assert test.descriptor == desc
    assert test.stream_at(2).take(1)[0].scale == 4


def test_tent_system_depth_zero_flagged_vacuous(tmp_path):
    config = write_config(
        tmp_path,
        "tent0.json",
        {"test": {"kind": "constant-unit", "dimension": 2}, "depth": 0, "cutoff": 0, "budget": 1},
    )
    out = tmp_path / "r.json"
    assert main(["tent-system", "--config", config, "--out", str(out)]) == 0
    report = json.loads(out.read_text())
    assert report["vacuous"] is True
    assert report["failures"] == []


def test_tent_system_bundle_verification_cli(tmp_path):
    config = write_config(
        tmp_path,
        "tent.json",
        {
            "test": {"kind": "concentric", "point": ["1/3", "1/3"], "scale_step": 2},
            "depth": 3,
            "budget": 4,
        },
    )
    bundle = tmp_path / "bundle.json"
    assert main(["tent-system", "--config", config, "--bundle", str(bundle)]) == 0
    assert main(["tent-system", "--check-bundle", str(bundle)]) == 0
    data = json.loads(bundle.read_text())
    data["stages"][2]["blocks"][0]["cell_scale"] -= 9
    tampered = tmp_path / "tampered.json"
    tampered.write_text(json.dumps(data), encoding="utf-8")
    assert main(["tent-system", "--check-bundle", str(tampered)]) == 1


def test_tent_system_reports_unattainable_precision(tmp_path, capsys):
    config = write_config(
        tmp_path,
        "tent.json",
        {
            "test": {"kind": "concentric", "point": ["1/3", "1/3"], "scale_step": 2},
            "depth": 2,
            "budget": 4,
            "points": [["1/3", "1/3"]],
            "oscillation_stages": [],
            "precisions": [6],
        },
    )
    out = tmp_path / "r.json"
    assert main(["tent-system", "--config", config, "--out", str(out)]) == 1
    report = json.loads(out.read_text())
    assert any("deeper build" in f for f in report["failures"])


def test_tent_system_reports_are_byte_identical(tmp_path):
    config = write_config(
        tmp_path,
        "tent.json",
        {
            "test": {"kind": "concentric", "point": ["1/3", "1/3"], "scale_step": 2},
            "depth": 3,
            "budget": 4,
            "points": [["1/3", "1/3"]],
            "oscillation_stages": [3],
            "modulus_pairs": 10,
        },
    )
    outs = [tmp_path / "a.json", tmp_path / "b.json"]
    for out in outs:
        assert main(["tent-system", "--config", config, "--seed", "9", "--out", str(out)]) == 0
    assert outs[0].read_bytes() == outs[1].read_bytes()


def test_dore_maleva_decimal_rendering(tmp_path):
    config = write_config(tmp_path, "dm.json", {"stages": 2, "geometry": False})
    out = tmp_path / "dm.json.out"
    assert main(["dore-maleva", "--config", config, "--out", str(out), "--decimals", "4"]) == 0
    report = json.loads(out.read_text())
    assert report["table"][0]["remaining_decimal"] == "0.5556"
    assert report["table"][1]["remaining_decimal"] == "0.3086"
