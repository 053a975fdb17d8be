import csv
import io
import json
import time

import numpy as np
import pytest

from nsqkd import build_full, build_reduced, solve, werner_correlations
from nsqkd import sweep as sweep_mod
from nsqkd.cli import main
from nsqkd.exceptions import SchemaError, TableStructureError, TableValidationError
from nsqkd.io import dump_lp, load_lp, lp_to_json_dict, parse_table
from nsqkd.testkit import signaling_table


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    return list(csv.DictReader(io.StringIO(text)))


def write_table(tmp_path, t, name="table.json"):
    path = tmp_path / name
    path.write_text(json.dumps(t.to_json_dict()))
    return str(path)


def test_sweep_default_grid(capsys):
    code, out, _ = run(capsys, "sweep")
    assert code == 0
    assert out.splitlines()[0] == "p,P_E,I_AB,I_BE_bound,K_raw,K"
    table = rows(out)
    assert len(table) == 101
    last = table[-1]
    assert float(last["p"]) == 1.0 and float(last["K"]) == pytest.approx(0.414, abs=5e-4)
    at70 = next(r for r in table if float(r["p"]) == pytest.approx(0.70))
    assert float(at70["P_E"]) == 1.0 and float(at70["K"]) == 0.0


def test_sweep_full_and_reduced_agree(capsys):
    _, red, _ = run(capsys, "sweep", "--steps", "21", "--form", "reduced")
    _, full, _ = run(capsys, "sweep", "--steps", "21", "--form", "full")
    for a, b in zip(rows(red), rows(full)):
        assert abs(float(a["P_E"]) - float(b["P_E"])) <= 1e-9


def test_sweep_both_records_cross_checks(capsys):
    code, out, _ = run(capsys, "sweep", "--steps", "11", "--form", "both", "--format", "json")
    doc = json.loads(out)
    assert code == 0 and len(doc["cross_checks"]) == 11
    assert all(abs(c["full_minus_reduced"]) <= 1e-9 for c in doc["cross_checks"])


def test_sweep_deterministic_and_parallel_safe(capsys, tmp_path):
    a, b, c = tmp_path / "a.csv", tmp_path / "b.csv", tmp_path / "c.csv"
    run(capsys, "sweep", "--steps", "41", "--out", str(a))
    run(capsys, "sweep", "--steps", "41", "--out", str(b))
    run(capsys, "sweep", "--steps", "41", "--out", str(c), "--jobs", "3")
    assert a.read_bytes() == b.read_bytes() == c.read_bytes()


def test_sweep_json_with_threshold(capsys):
    code, out, _ = run(capsys, "sweep", "--steps", "5", "--format", "json", "--threshold")
    doc = json.loads(out)
    assert doc["grid"] == {"p_min": 0.0, "p_max": 1.0, "steps": 5}
    assert doc["threshold"] == pytest.approx(0.9038, abs=5e-4)
    assert doc["provenance"] == "werner" and doc["version"]
    assert [r["p"] for r in doc["records"]] == [0.0, 0.25, 0.5, 0.75, 1.0]


def test_sweep_reports_failing_point(capsys, monkeypatch):
    real = sweep_mod.evaluate_point

    def flaky(p, **kw):
        if p == 0.5:
            raise np.linalg.LinAlgError("singular basis")
        return real(p, **kw)

    monkeypatch.setattr(sweep_mod, "evaluate_point", flaky)
    code, _, err = run(capsys, "sweep", "--steps", "3")
    assert code == 1 and "p=0.5" in err


def test_solve_noiseless(capsys):
    code, out, _ = run(capsys, "solve", "--p", "1")
    doc = json.loads(out)
    assert code == 0
    assert doc["P_E"] == pytest.approx(0.792893, abs=1e-6)
    assert len(doc["distribution"]) == 48
    assert abs(doc["certificate"]["gap"]) <= 1e-8 and doc["certificate"]["ok"]
    assert doc["solution"]["status"] == "optimal"


def test_solve_fully_mixed(capsys):
    doc = json.loads(run(capsys, "solve", "--p", "0")[1])
    assert doc["P_E"] == 1.0


def test_solve_table_round_trip(capsys, tmp_path):
    path = write_table(tmp_path, werner_correlations(0.95))
    by_table = json.loads(run(capsys, "solve", "--table", path)[1])
    by_p = json.loads(run(capsys, "solve", "--p", "0.95")[1])
    for key in ("P_E", "I_AB", "I_BE_bound", "K_raw", "K", "distribution", "certificate", "form"):
        assert by_table[key] == by_p[key]


def test_solve_asymmetric_table_routes_to_full(capsys, tmp_path):
    t = np.array(werner_correlations(0.9).probs)
    t[0, 0] = [[0.50, 0.05], [0.00, 0.45]]
    t[0, 1] = [[0.30, 0.25], [0.20, 0.25]]
    from nsqkd.protocol import CorrelationTable

    path = write_table(tmp_path, CorrelationTable(t))
    doc = json.loads(run(capsys, "solve", "--table", path)[1])
    assert doc["form"] == "full"
    code, _, err = run(capsys, "solve", "--table", path, "--form", "reduced")
    assert code == 1 and "build_full" in err


def test_threshold_command(capsys, tmp_path):
    out_file = tmp_path / "thr.json"
    code, out, _ = run(capsys, "threshold", "--out", str(out_file))
    fine = json.loads(out_file.read_text())
    assert code == 0 and "p* =" in out
    assert fine["p_star"] == pytest.approx(0.9038, abs=5e-4)
    assert fine["bracket"][1] - fine["bracket"][0] <= 1e-6
    coarse_file = tmp_path / "coarse.json"
    run(capsys, "threshold", "--tol", "1e-2", "--out", str(coarse_file))
    lo, hi = json.loads(coarse_file.read_text())["bracket"]
    assert hi - lo <= 1e-2 and lo <= fine["p_star"] <= hi


def test_threshold_bad_bracket(capsys):
    code, _, err = run(capsys, "threshold", "--bracket", "0.95", "1.0")
    assert code == 1 and "no sign change" in err


def test_export_lp_counts(capsys, tmp_path):
    path = tmp_path / "lp.json"
    assert run(capsys, "export-lp", "--p", "1", "--form", "reduced", "--out", str(path))[0] == 0
    doc = json.loads(path.read_text())
    assert doc["num_vars"] == 24 and len(doc["equalities"]) == 14
    assert doc["metadata"] == {"p": 1.0, "form": "reduced"}
    assert set(doc) == {"num_vars", "var_names", "objective", "equalities", "bounds", "metadata"}


@pytest.mark.parametrize("build", [build_reduced, build_full])
@pytest.mark.parametrize("p", [0.0, 0.731, 1.0])
def test_export_round_trip_bit_exact(build, p):
    inst = build(werner_correlations(p))
    back = load_lp(dump_lp(inst))
    for attr in ("objective", "A_eq", "b_eq", "lower", "upper"):
        assert getattr(back, attr).tobytes() == getattr(inst, attr).tobytes()
    assert back.constant == inst.constant and back.var_names == inst.var_names
    assert lp_to_json_dict(back) == lp_to_json_dict(inst)
    assert solve(back).value == solve(inst).value


def test_load_lp_schema_diagnostics():
    doc = lp_to_json_dict(build_reduced(werner_correlations(0.5)))
    doc["bounds"]["upper"][3] = "big"
    with pytest.raises(SchemaError, match="bounds/upper/3"):
        load_lp(json.dumps(doc))
    doc = lp_to_json_dict(build_reduced(werner_correlations(0.5)))
    doc["equalities"][2]["coeffs"].pop()
    with pytest.raises(SchemaError, match="equalities/2/coeffs"):
        load_lp(json.dumps(doc))
    with pytest.raises(SchemaError, match="line 2"):
        load_lp('{\n "num_vars": ,\n}')


def test_ingest_rejects_signaling(capsys, tmp_path):
    path = write_table(tmp_path, signaling_table())
    code, _, err = run(capsys, "ingest", "--table", path)
    assert code == 1 and "Alice-marginal no-signaling" in err


def test_ingest_solve_and_sweep(capsys, tmp_path):
    path = write_table(tmp_path, werner_correlations(1.0))
    doc = json.loads(run(capsys, "ingest", "--table", path, "--run", "solve")[1])
    assert doc["P_E"] == pytest.approx(0.792893, abs=1e-6)
    code, out, _ = run(capsys, "ingest", "--table", path, "--run", "sweep", "--steps", "11")
    _, ref, _ = run(capsys, "sweep", "--steps", "11")
    assert code == 0
    for a, b in zip(rows(out), rows(ref)):
        for k in a:
            assert float(a[k]) == pytest.approx(float(b[k]), abs=1e-11)


def test_parse_table_errors():
    good = werner_correlations(0.4).to_json_dict()
    with pytest.raises(SchemaError, match="line 1"):
        parse_table("{settings: []}")
    bad = json.loads(json.dumps(good))
    bad["settings"][4]["probs"] = [[0.1, 0.2, 0.3], [0.1, 0.2]]
    with pytest.raises(SchemaError, match="settings/4/probs"):
        parse_table(json.dumps(bad))
    dup = json.loads(json.dumps(good))
    dup["settings"].append(dup["settings"][0])
    with pytest.raises(TableStructureError, match="duplicate"):
        parse_table(json.dumps(dup))
    with pytest.raises(TableValidationError, match="normalization"):
        t = np.array(werner_correlations(0.4).probs)
        t[2, 1] *= 0.99
        from nsqkd.protocol import CorrelationTable

        parse_table(json.dumps(CorrelationTable(t).to_json_dict()))


def test_usage_errors_exit_2(capsys):
    for argv in (["solve", "--p", "1.5"], ["bogus"], ["sweep", "--steps", "0"], []):
        with pytest.raises(SystemExit) as exc:
            main(argv)
        assert exc.value.code == 2
    capsys.readouterr()


def test_missing_file_is_domain_error(capsys, tmp_path):
    code, _, err = run(capsys, "solve", "--table", str(tmp_path / "nope.json"))
    assert code == 1 and "error" in err


def test_log_level_env(capsys, monkeypatch):
    monkeypatch.setenv("NSQKD_LOG_LEVEL", "debug")
    assert run(capsys, "solve", "--p", "0.9")[0] == 0


def test_fine_sweep_is_fast(capsys, tmp_path):
    t0 = time.perf_counter()
    assert run(capsys, "sweep", "--steps", "1001", "--out", str(tmp_path / "s.csv"))[0] == 0
    assert time.perf_counter() - t0 < 60
