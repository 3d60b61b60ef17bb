import json
import subprocess
import sys

import numpy as np
import pytest

from pentablock import cli
from pentablock.jsonio import decode_operator, encode_matrix, encode_triple


def _run(capsys, *argv):
    code = cli.run(list(argv))
    out = capsys.readouterr()
    return code, (json.loads(out.out) if out.out.strip() else None), out.err


def _triple_json(a, s, p):
    return json.dumps({"a": a, "s": s, "p": p})


def test_classify_counterexample_refuted_with_spectral_witness(capsys):
    code, rep, _ = _run(capsys, "classify", "--json", _triple_json(np.sqrt(3) / 2, 1, 0))
    assert code == cli.EXIT_REFUTED and rep["verdict"] == "Refuted"
    assert rep["witness"]["kind"] == "spectral_point"


def test_classify_p_unitary_certified(capsys):
    code, rep, _ = _run(capsys, "classify", "--kind", "p-unitary", "--json", _triple_json(0, 2, 1))
    assert code == cli.EXIT_OK and rep["verdict"] == "Certified"


def test_solve_sigma_obstruction(capsys):
    code, rep, _ = _run(capsys, "solve-sigma", "--json", _triple_json(0, 0, 1))
    assert code == cli.EXIT_REFUTED and rep["solvable"] is False


def test_falsify_scaled_identity(capsys):
    code, rep, _ = _run(capsys, "falsify", "--trials", "10", "--json", _triple_json(1.1, 0, 0))
    assert code == cli.EXIT_REFUTED
    assert rep["witness"]["operator_norm"] > rep["witness"]["sup_estimate"]


def test_dilate_known_data(capsys):
    obj = {"A": [[1]], "S": [[0]], "P": [[0.5]], "data": {"F1": [[1]], "F2": [[0]]}}
    code, rep, _ = _run(capsys, "dilate", "--json", json.dumps(obj))
    assert code == cli.EXIT_OK and rep["passed"] and rep["data_source"] == "input"


def test_dilate_unsolvable(capsys):
    code, rep, _ = _run(capsys, "dilate", "--json", _triple_json(0, 0, 1))
    assert code == cli.EXIT_REFUTED and "reason" in rep


def test_dilate_schaffer(capsys):
    code, rep, _ = _run(capsys, "dilate", "--kind", "schaffer", "--json", json.dumps({"S": [[0.5]], "P": [[0.2]]}))
    assert code == cli.EXIT_OK
    assert rep["gamma_isometry"]["verdict"] == "Certified"


def test_fundop_reports_F(capsys):
    code, rep, _ = _run(capsys, "fundop", "--json", json.dumps({"S": [[0.5]], "P": [[0.2]]}))
    assert code == cli.EXIT_OK
    assert decode_operator(rep["F"]).shape == (1, 1) and rep["omega"] <= 1


@pytest.mark.parametrize("cls", cli.SAMPLE_CLASSES)
def test_sample_every_class(capsys, cls):
    code, rep, _ = _run(capsys, "sample", cls, "--count", "2", "--dim", "2", "--seed", "4")
    assert code == cli.EXIT_OK and len(rep["instances"]) == 2


def test_sample_unknown_class(capsys):
    code, rep, err = _run(capsys, "sample", "nonsense")
    assert code == cli.EXIT_INPUT and rep is None and "unknown sample class" in err


def test_malformed_json_reports_position(capsys):
    code, _, err = _run(capsys, "classify", "--json", '{"a": 1,\n "s": }')
    assert code == cli.EXIT_INPUT and "line 2" in err


def test_shape_mismatch_is_input_error(capsys):
    obj = {"A": [[1, 0], [0, 1]], "S": [[0]], "P": [[0]]}
    code, _, err = _run(capsys, "classify", "--json", json.dumps(obj))
    assert code == cli.EXIT_INPUT and "shapes" in err


def test_missing_file_is_input_error(capsys, tmp_path):
    code, _, err = _run(capsys, "classify", str(tmp_path / "absent.json"))
    assert code == cli.EXIT_INPUT and "cannot read" in err


def test_output_is_deterministic(capsys):
    argv = ["sample", "p-unitary", "--count", "3", "--dim", "3", "--seed", "11"]
    cli.run(argv)
    first = capsys.readouterr().out
    cli.run(argv)
    assert capsys.readouterr().out == first


def test_sample_round_trip_through_classify(capsys, tmp_path):
    _, rep, _ = _run(capsys, "sample", "p-unitary", "--dim", "3", "--seed", "2")
    path = tmp_path / "t.json"
    path.write_text(json.dumps(rep["instances"][0]))
    code, back, _ = _run(capsys, "classify", "--kind", "p-unitary", str(path))
    assert code == cli.EXIT_OK and back["verdict"] == "Certified"


def test_decompose_matrix_triple(capsys, rng):
    from pentablock import generators as gen

    c = gen.mixed_triple(2, 1, rng)
    code, rep, _ = _run(capsys, "decompose", "--json", json.dumps(encode_triple(c.triple)))
    assert code == cli.EXIT_OK and rep["decomposition"]["dims"] == {"unitary": 2, "rest": 1}


def test_out_file(capsys, tmp_path):
    out = tmp_path / "r.json"
    code = cli.run(["solve-sigma", "--out", str(out), "--json", _triple_json(0, 0, 0)])
    assert code == cli.EXIT_OK and capsys.readouterr().out == ""
    assert json.loads(out.read_text())["solvable"] is True


def test_module_entry_point_and_stdin():
    proc = subprocess.run(
        [sys.executable, "-m", "pentablock", "classify", "--kind", "p-unitary", "-"],
        input=json.dumps({"A": encode_matrix(np.zeros((1, 1))), "S": [[2]], "P": [[1]]}),
        capture_output=True,
        text=True,
        timeout=120,
    )
    assert proc.returncode == 0 and json.loads(proc.stdout)["verdict"] == "Certified"


def test_threads_cap(capsys):
    code, rep, _ = _run(capsys, "solve-sigma", "--threads", "1", "--json", _triple_json(0, 0, 0))
    assert code == cli.EXIT_OK and rep["solvable"] is True
