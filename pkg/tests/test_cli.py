import io
import json

import pytest

from oracles import markov_path_measure
from sftrohlin.cli import EXIT_INPUT, EXIT_LIMITED, EXIT_OK, run

GOLDEN = "1,1;1,0"


def call(*argv):
    buf = io.StringIO()
    code = run(list(argv), stdout=buf)
    return code, buf.getvalue()


def call_json(*argv):
    code, text = call(*argv, "--json")
    return code, json.loads(text)


def untag(obj):
    if isinstance(obj, dict):
        if set(obj) == {"exact"}:
            return obj["exact"]
        if set(obj) == {"float", "tol"}:
            return obj["float"]
        return {k: untag(v) for k, v in obj.items()}
    if isinstance(obj, list):
        return [untag(v) for v in obj]
    return obj


def leaves_tagged(obj):
    """Every number below the top level sits inside an exact or float tag."""
    if isinstance(obj, dict):
        if "exact" in obj or "float" in obj:
            return True
        return all(leaves_tagged(v) for v in obj.values())
    if isinstance(obj, list):
        return all(leaves_tagged(v) for v in obj)
    return not isinstance(obj, (int, float)) or isinstance(obj, bool)


def test_invariants_golden():
    code, out = call_json("invariants", "--matrix", GOLDEN)
    assert code == EXIT_OK and leaves_tagged(out)
    v = untag(out)
    assert v["eventual_rank"] == 2 and v["infinitesimal_rank"] == 2 and v["full_shift"] is False
    assert v["minimal_polynomial"] == "x**2 - x - 1"
    assert out["lambda"]["tol"] > 0


def test_invariants_full_shift():
    code, out = call_json("invariants", "--matrix", "1,1;1,1")
    assert code == EXIT_OK and untag(out)["full_shift"] == 2  # reports n for a full n-shift


def test_measure_matches_oracle():
    code, out = call_json("measure", "--matrix", GOLDEN, "--cylinder", "0,1")
    assert code == EXIT_OK
    assert abs(untag(out)["measure"] - markov_path_measure([[1, 1], [1, 0]], (0, 1))) < 1e-12


def test_se_found_and_not_found():
    code, out = call_json("se", "1,1;1,1", "2")
    assert code == EXIT_OK
    cert = untag(out)["certificate"]
    assert cert["R"] == [[1], [1]] and cert["S"] == [[1, 1]]
    code, out = call_json("se", "2", "3")
    assert code == EXIT_LIMITED


def test_tower_json():
    code, out = call_json("tower", "--matrix", GOLDEN, "--m", "1")
    assert code == EXIT_OK and leaves_tagged(out)


@pytest.mark.parametrize("argv", [
    ("invariants", "--matrix", "0,1;1,0"),
    ("invariants", "--matrix", "1,1;1"),
    ("invariants", "--matrix", "1.5,1;1,0"),
    ("measure", "--matrix", GOLDEN, "--cylinder", "1,1"),
])
def test_input_errors_exit_three(argv):
    code, _ = call(*argv)
    assert code == EXIT_INPUT


def test_output_is_deterministic():
    a = call("invariants", "--matrix", GOLDEN, "--json", "--seed", "7")
    b = call("invariants", "--matrix", GOLDEN, "--json", "--seed", "7")
    assert a == b


def test_table_output():
    code, text = call("invariants", "--matrix", GOLDEN)
    assert code == EXIT_OK and "eventual_rank" in text
