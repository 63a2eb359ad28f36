import csv
import io
import json

import numpy as np
import pytest

from padoa import io as pio
from padoa.cli import main
from padoa.instances import random_instance, tiny
from padoa.model import BlockSpec, CouplingConstraint, Power, StructuredMicp


def test_round_trip_is_exact():
    for p in (tiny(), random_instance(0), random_instance(7)):
        back = pio.loads_problem(pio.dumps_problem(p))
        assert pio.dumps_problem(back) == pio.dumps_problem(p)
        assert np.array_equal(back.A, p.A) and np.array_equal(back.b, p.b)
        rng = np.random.default_rng(0)
        x = rng.uniform(p.lb_x, p.ub_x)
        z = rng.integers(0, 2, p.n_z).astype(float)
        assert back.evaluate(x, z) == p.evaluate(x, z)


def test_syntax_error_reports_line():
    text = '{\n "blocks": [\n  {"nx": 1,,}\n ]\n}'
    with pytest.raises(pio.InstanceError) as info:
        pio.loads_problem(text, "bad.json")
    assert info.value.line == 3
    assert str(info.value).startswith("bad.json:3:")


def test_missing_field_reports_block_line():
    data = json.loads(pio.dumps_problem(tiny()))
    del data["blocks"][1]["nx"]
    text = json.dumps(data, indent=1)
    with pytest.raises(pio.InstanceError) as info:
        pio.loads_problem(text)
    assert info.value.line is not None
    assert "nx" in str(info.value)


def nonconvex_text():
    data = json.loads(pio.dumps_problem(tiny()))
    data["blocks"][1]["terms"][0]["w"] = -1.0
    return json.dumps(data, indent=1)


def test_validation_message_points_at_block():
    text = nonconvex_text()
    try:
        problem = pio.loads_problem(text, "nc.json")
    except pio.InstanceError as exc:
        assert exc.line is not None
        return
    msgs = pio.validation_messages(problem, text, "nc.json")
    assert msgs and all("block 1" in m for m in msgs)
    second = pio.block_lines(text)[1]
    assert msgs[0].startswith(f"nc.json:{second}:")


def write(tmp_path, problem, name="p.json"):
    path = tmp_path / name
    pio.save_problem(problem, path)
    return str(path)


@pytest.mark.parametrize("algorithm", ["padoa", "oa", "enumerate"])
def test_solve_tiny(tmp_path, capsys, algorithm):
    path = write(tmp_path, tiny())
    assert main(["solve", path, "--algorithm", algorithm]) == 0
    sol = json.loads(capsys.readouterr().out)
    assert sol["status"] == "Optimal"
    assert sol["value"] == pytest.approx(0.5, abs=1e-6)
    assert sol["z"] == [0, 0]


def test_exit_code_for_bad_input(tmp_path, capsys):
    bad = tmp_path / "bad.json"
    bad.write_text("{")
    assert main(["solve", str(bad)]) == 1
    assert main(["solve", str(tmp_path / "missing.json")]) == 1
    bad.write_text(nonconvex_text())
    assert main(["solve", str(bad)]) == 1
    assert main(["validate", str(bad)]) == 1
    assert "error:" in capsys.readouterr().err


def test_exit_code_for_epsilon_l(tmp_path):
    path = write(tmp_path, tiny())
    assert main(["solve", path, "--epsilon", "1e-6", "--epsilon-l", "1e-3"]) == 1


def test_exit_code_for_infeasible(tmp_path, capsys):
    blk = BlockSpec(1, 1, [0], [1], [0], [1], terms=(Power([1.0, 0.0], 0, 2, 1),))
    p = StructuredMicp((blk,), CouplingConstraint.from_triplets([(0, 0, 1.0)], [5.0]))
    path = write(tmp_path, p)
    cert = tmp_path / "cert.json"
    assert main(["solve", path, "--certificate-out", str(cert)]) == 2
    assert json.loads(capsys.readouterr().out)["status"] == "Infeasible"
    assert cert.exists()


def test_exit_code_for_iteration_limit(tmp_path, capsys):
    path = write(tmp_path, tiny())
    assert main(["solve", path, "--algorithm", "oa", "--z0", "1,1", "--max-iter", "1"]) == 3


def test_validate_ok(tmp_path, capsys):
    path = write(tmp_path, random_instance(2))
    assert main(["validate", path]) == 0
    assert ": ok (" in capsys.readouterr().out


def test_traces_are_byte_identical_without_timings(tmp_path):
    path = write(tmp_path, random_instance(5))
    outs = []
    for k, threads in enumerate((1, 2)):
        trace = tmp_path / f"t{k}.csv"
        sol = tmp_path / f"s{k}.json"
        args = ["solve", path, "--no-timings", "--threads", str(threads), "--trace-out", str(trace),
                "--solution-out", str(sol)]
        assert main(args) == 0
        outs.append((trace.read_bytes(), sol.read_bytes()))
    assert outs[0] == outs[1]


def test_bench_tcl_and_trace(tmp_path, capsys):
    run = tmp_path / "run"
    args = ["bench-tcl", "--rooms", "3", "--horizon", "8", "-a", "milp-direct", "-a", "padoa",
            "--out-dir", str(run), "--no-timings"]
    assert main(args) == 0
    rows = list(csv.DictReader(io.StringIO(capsys.readouterr().out)))
    assert [r["algorithm"] for r in rows] == ["milp-direct", "padoa"]
    vals = [float(r["objective"]) for r in rows]
    assert vals[1] == pytest.approx(vals[0], abs=1e-6)
    assert float(rows[1]["energy"]) == pytest.approx(vals[1], abs=1e-6)
    assert (run / "instance.json").exists() and (run / "trace-padoa.csv").exists()

    assert main(["trace", str(run)]) == 0
    lines = list(csv.reader(io.StringIO(capsys.readouterr().out)))
    assert lines[0] == ["run", "iter", "U", "LB", "gap"]
    assert any(r[0] == "trace-padoa" for r in lines[1:])


def test_trace_missing_dir(tmp_path, capsys):
    assert main(["trace", str(tmp_path / "nothing")]) == 1


def test_bench_tcl_bad_ambient(tmp_path, capsys):
    f = tmp_path / "amb.csv"
    f.write_text("20\n")
    assert main(["bench-tcl", "--ambient", str(f)]) == 1
