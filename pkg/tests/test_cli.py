import json
import os
import re

import pytest

from stabmod import cli, expr, gmod, hopf
from stabmod import stable as st


def run(capsys, *argv):
    code = cli.main(list(argv))
    out = capsys.readouterr()
    return code, out.out, out.err


def numbers(text):
    return set(re.findall(r"-?\d+", text))


@pytest.fixture(scope="module")
def a1():
    return hopf.preset("A1")


@pytest.fixture
def joker_file(tmp_path, a1):
    p = tmp_path / "joker.json"
    p.write_text(json.dumps(gmod.joker(a1).to_json()))
    return str(p)


def test_validate(capsys):
    code, out, _ = run(capsys, "validate", "--preset", "A1")
    assert code == 0 and "coassociative" in out


def test_margolis_from_file(capsys, joker_file):
    code, out, _ = run(capsys, "margolis", "--preset", "A1", "--module", joker_file, "--format", "json")
    js = json.loads(out)
    assert code == 0 and js["modules"][0]["homology"] == {"p1": {"2": 1}, "p2": {"2": 1}}


def test_cover_check(capsys):
    code, out, _ = run(capsys, "cover-check", "--preset", "A1", "--cover", "1:1,2:2")
    assert code == 0 and "cover: yes" in out
    code, out, _ = run(capsys, "cover-check", "--preset", "A1", "--cover", "1:1,1:2")
    assert code == 1 and "cover: no" in out


@pytest.mark.parametrize("argv", [
    ["frobnicate"],
    ["validate", "--preset", "A7"],
    ["margolis", "--module", "Q"],
    ["margolis"],
    ["localize", "--segment", "2:2", "--window", "5:1"],
    ["cover-check"],
    ["tensor", "--module", "J"],
    ["mv-check", "--module", "1", "--module", "1", "--cover", "1:2"],
])
def test_usage_errors(capsys, argv):
    code, _, err = run(capsys, *argv)
    assert code == 2


def test_domain_error_exit(capsys):
    code, _, err = run(capsys, "postnikov", "--cut", "2")
    assert code == 1 and "postnikov" in err


def test_json_reproducible(capsys):
    argv = ["tensor", "--module", "R", "--module", "J", "--seed", "7", "--format", "json"]
    _, first, _ = run(capsys, *argv)
    _, second, _ = run(capsys, *argv)
    assert first == second
    _, other, _ = run(capsys, *argv[:-4], "--seed", "8", "--format", "json")
    assert other != first


@pytest.mark.parametrize("argv", [
    ["margolis", "--module", "J"],
    ["strip", "--module", "J*J"],
    ["ext", "--s", "0:3", "--t", "0:8"],
    ["localize", "--segment", "2:2", "--window", "0:16"],
    ["pic-check", "--module", "S^2 O^1 1"],
    ["resolve", "--length", "3"],
])
def test_text_numbers_in_json(capsys, argv):
    _, text, _ = run(capsys, *argv)
    _, js, _ = run(capsys, *argv, "--format", "json")
    assert numbers(text) <= numbers(js)


def test_localize_json_certified(capsys):
    code, out, _ = run(capsys, "localize", "--segment", "2:2", "--window", "0:24", "--format", "json")
    js = json.loads(out)
    row = js["modules"][0]
    assert code == 0 and row["certified"] == [0, 19]
    assert row["homology_in_window"] == {"p1": {}, "p2": {"0": 1}}


def test_mv_and_glue(capsys):
    code, out, _ = run(capsys, "mv-check", "--module", "1", "--module", "C1", "--cover", "1:1,2:2",
                       "--format", "json")
    assert code == 0 and json.loads(out)["certified"]
    code, out, _ = run(capsys, "glue", "--module", "J", "--cover", "1:1,2:2", "--window", "0:16")
    assert code == 0 and "stably_isomorphic: yes" in out


def test_pic_check(capsys):
    code, out, _ = run(capsys, "pic-check", "--module", "J * J * dual(J)", "--format", "json")
    js = json.loads(out)
    assert code == 0 and js["modules"][0]["invariant"] == [2, 2]
    code, _, _ = run(capsys, "pic-check", "--module", "C1")
    assert code == 1


def test_other_commands(capsys, tmp_path):
    out_file = tmp_path / "d.json"
    assert run(capsys, "dual", "--module", "J", "--out", str(out_file))[0] == 0
    assert json.loads(out_file.read_text())["dims"] == {"-4": 1, "-3": 1, "-2": 1, "-1": 1, "0": 1}
    assert run(capsys, "free-check", "--module", "A + J")[0] == 0
    assert run(capsys, "omega", "--module", "1", "--power", "-1")[0] == 0
    assert run(capsys, "support", "--module", "C2")[0] == 0
    assert run(capsys, "postnikov", "--window", "0:16")[0] == 0
    assert run(capsys, "validate", "--preset", "lambda(0)", "--threads", "2")[0] == 0


def test_cache(capsys, tmp_path, monkeypatch):
    monkeypatch.setenv("STABMOD_CACHE", str(tmp_path))
    argv = ["localize", "--segment", "2:2", "--window", "0:12", "--format", "json"]
    _, first, _ = run(capsys, *argv)
    files = os.listdir(tmp_path)
    assert len(files) == 1 and files[0].startswith("unit-")
    _, second, _ = run(capsys, *argv)
    assert first == second and os.listdir(tmp_path) == files
    run(capsys, "resolve", "--length", "2")
    assert any(f.startswith("resolution-") for f in os.listdir(tmp_path))


def test_algebra_file(capsys, tmp_path, a1):
    p = tmp_path / "alg.json"
    p.write_text(json.dumps(a1.to_json()))
    code, out, _ = run(capsys, "margolis", "--algebra", str(p), "--module", "1", "--format", "json")
    assert code == 0 and json.loads(out)["modules"][0]["homology"] == {"p1": {"0": 1}, "p2": {"0": 1}}


# -- expressions --------------------------------------------------------------

def test_expr_tokens():
    assert expr.tokenize("S^-2 O^1 (J + C1) * dual(R3)") == \
        ["S^", "-", "2", "O^", "1", "(", "J", "+", "C1", ")", "*", "dual", "(", "R3", ")"]


def test_expr_values(a1):
    J = gmod.joker(a1)
    assert expr.parse_module("J * J", a1).dims == gmod.tensor(J, J).dims
    assert expr.parse_module("S^3 1", a1).dims == {3: 1}
    assert expr.parse_module("O^-1 1", a1).dims == st.omega_inv(gmod.unit(a1)).dims
    assert expr.parse_module("dual(J)", a1).dims == gmod.dual(J).dims
    assert expr.parse_module("1 + 1", a1).dim == 2
    assert expr.parse_module("F[0, 2]", a1).dim == 16
    assert st.is_stably_iso(expr.parse_module("J*J*dual(J)", a1), J)


def test_expr_precedence(a1):
    # * binds tighter than +
    m = expr.parse_module("1 + J * J", a1)
    assert m.dim == 1 + 25


@pytest.mark.parametrize("bad", ["", "J *", "(J", "dual J", "S^x 1", "C3", "J J", "@"])
def test_expr_errors(a1, bad):
    with pytest.raises(expr.ExpressionError):
        expr.parse_module(bad, a1)


def test_expr_joker_only_a1():
    with pytest.raises(expr.ExpressionError):
        expr.parse_module("J", hopf.preset("E1"))
