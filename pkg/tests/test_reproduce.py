import json

from mgs.reproduce import CASES, expected, run_case

FAST_CASES = ("chsh-bounds", "ineq10-bound", "sec3b-ghz4", "sec3c", "thm1",
              "lifted-chsh", "svet-counterexample", "svetlichny")


def test_every_required_case_is_registered():
    for name in ("sec3a", "sec3b-ghz4", "sec3c", "thm1", "lifted-chsh",
                 "svet-counterexample", "ineq10-bound", "chsh-bounds"):
        assert name in CASES


def test_fixture_constants_are_wellformed():
    exp = expected()
    assert exp["ineq10-bound"]["ns42_max"]["value"] == "105"
    assert abs(exp["sec3a"]["quantum_value"]["value"] - 117.88268590217984) == 0
    assert exp["sec3a"]["quantum_value"]["tol"] == 5e-4


def test_fast_cases_pass(capsys):
    for name in FAST_CASES:
        assert run_case(name) == 0, f"case {name} failed"
    out = capsys.readouterr().out
    assert "FAIL" not in out


def test_json_output_shape(capsys):
    assert run_case("svet-counterexample", as_json=True) == 0
    payload = json.loads(capsys.readouterr().out)
    checks = payload["svet-counterexample"]["checks"]
    assert {c["status"] for c in checks} == {"ok"}
    assert all({"name", "expected", "actual", "status"} <= set(c) for c in checks)
