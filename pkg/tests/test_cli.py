import json
import subprocess
import sys

import pytest

from beliefrev.cli import main

CHAIN = """net chain
var a 2
prior a 0.2
var b 2
parents b a
cpt b 0.9 0.1 0.1 0.9
"""


@pytest.fixture
def chain_files(tmp_path):
    net = tmp_path / "chain.bn"
    net.write_text(CHAIN)
    ev = tmp_path / "b.ev"
    ev.write_text("obs b TRUE\n")
    return str(net), str(ev)


def run(capsys, *argv):
    code = main(list(argv))
    out, err = capsys.readouterr()
    return code, out, err


class TestUpdate:
    def test_chain(self, capsys, chain_files):
        net, ev = chain_files
        code, out, _ = run(capsys, "update", "--net", net, "--evidence", ev)
        assert code == 0
        assert "BEL(+a)=0.692308" in out

    def test_json(self, capsys, chain_files):
        net, ev = chain_files
        code, out, _ = run(capsys, "update", "--net", net, "--evidence", ev, "--json")
        data = json.loads(out)
        assert list(data["beliefs"]) == ["a", "b"]
        assert data["beliefs"]["a"]["TRUE"] == pytest.approx(0.18 / 0.26)

    def test_loopy(self, capsys):
        code, _, err = run(capsys, "update", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev")
        assert code == 1
        assert "multiply-connected: use revise --condition or oracle" in err

    def test_contradiction(self, capsys, tmp_path):
        net = tmp_path / "z.bn"
        net.write_text("var a 2\nprior a 0\nvar b 2\nparents b a\ncpt b 1 0 0 1\n")
        ev = tmp_path / "z.ev"
        ev.write_text("obs b TRUE\n")
        code, _, err = run(capsys, "update", "--net", str(net), "--evidence", str(ev))
        assert code == 2
        assert "contradictory" in err

    def test_trace(self, capsys, chain_files, tmp_path):
        net, ev = chain_files
        path = tmp_path / "t.txt"
        assert run(capsys, "update", "--net", net, "--evidence", ev, "--trace", str(path))[0] == 0
        lines = path.read_text().splitlines()
        assert lines[0].startswith("step=1 edge=")
        assert all(" kind=" in line and " msg=[" in line for line in lines)


class TestRevise:
    def test_diagnosis_d1_true(self, capsys, tmp_path):
        path = tmp_path / "trace.txt"
        code, out, _ = run(
            capsys, "revise", "--net", "fig3-sec4.bn", "--evidence", "fig3-d1-true.ev", "--trace", str(path)
        )
        assert code == 0
        assert "interpretation: d1=TRUE d2=FALSE d3=FALSE d4=FALSE" in out
        text = path.read_text()
        for edge, r in [
            ("m1->d2", "1.4"), ("m3->d3", "1.225"), ("m2->d4", "0.5"),
            ("m4->d4", "0.2"), ("m4->d3", "0.8"), ("m4->d2", "0.7"),
        ]:
            assert f"edge={edge} kind=lambda* " in text
            line = next(l for l in text.splitlines() if f"edge={edge} " in l)
            assert f"ratio={r}" in line

    def test_diagnosis_d1_false(self, capsys, tmp_path):
        path = tmp_path / "trace.json"
        code, out, _ = run(
            capsys, "revise", "--net", "fig3-sec4.bn", "--evidence", "fig3-d1-false.ev", "--trace", str(path)
        )
        assert code == 0
        assert "d2=TRUE d3=TRUE d4=FALSE" in out
        events = json.loads(path.read_text())
        m1 = [e for e in events if e["from"] == "m1" and e["to"] == "d2"]
        assert m1 and m1[-1]["ratio"] == float("inf")
        assert {"step", "node", "from", "to", "kind", "before", "after"} <= set(events[0])

    def test_loopy_needs_condition(self, capsys):
        code, _, err = run(capsys, "revise", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev")
        assert code == 1
        assert "--condition" in err

    @pytest.mark.parametrize("cond", ["d1", "auto"])
    def test_conditioning(self, capsys, cond):
        code, out, _ = run(capsys, "revise", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev", "--condition", cond)
        assert code == 0
        assert "score=8.2944e-04" in out
        assert "score=7.1850e-03" in out
        assert "interpretation: d1=FALSE d2=TRUE d3=TRUE d4=FALSE" in out

    def test_conditioning_json(self, capsys):
        code, out, _ = run(
            capsys, "revise", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev", "--condition", "d1", "--json"
        )
        data = json.loads(out)
        assert data["cutset"] == ["d1"]
        assert [c["score"] for c in data["candidates"]] == [pytest.approx(7.185e-3, rel=1e-3), pytest.approx(8.2944e-4)]
        assert data["assignment"]["d1"] == "FALSE"
        assert list(data["assignment"]) == ["d1", "d2", "d3", "d4", "m1", "m2", "m3", "m4"]

    def test_conditioned_trace(self, capsys, tmp_path):
        path = tmp_path / "trace.txt"
        run(capsys, "revise", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev", "--condition", "d1",
            "--trace", str(path))
        text = path.read_text()
        assert "# instantiation d1=FALSE" in text and "# instantiation d1=TRUE" in text


class TestOracle:
    def test_mpe(self, capsys):
        code, out, _ = run(capsys, "oracle", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev", "--query", "mpe")
        assert code == 0
        assert "interpretation: d1=FALSE d2=TRUE d3=TRUE d4=FALSE" in out

    def test_bel(self, capsys):
        code, out, _ = run(capsys, "oracle", "--net", "fig3-sec5.bn", "--query", "bel:d2", "--json")
        assert json.loads(out) == {"d2": {"FALSE": pytest.approx(0.9), "TRUE": pytest.approx(0.1)}}

    def test_oversized(self, capsys, tmp_path):
        net = tmp_path / "big.bn"
        net.write_text("".join(f"var v{i} 2\nprior v{i} 0.5\n" for i in range(25)))
        code, _, err = run(capsys, "oracle", "--net", str(net), "--query", "mpe")
        assert code == 3
        assert "state space" in err

    def test_bad_query(self, capsys):
        assert run(capsys, "oracle", "--net", "fig3-sec5.bn", "--query", "median")[0] == 1


class TestSweep:
    def test_switch(self, capsys):
        code, out, _ = run(capsys, "sweep", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev",
                           "--param", "prior:d1", "--range", "0.001,0.5", "--resolution", "1e-4")
        assert code == 0
        assert out.startswith("switch prior:d1 at 0.080")

    def test_descending_same(self, capsys):
        args = ["sweep", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev", "--param", "prior:d1", "--json"]
        up = json.loads(run(capsys, *args, "--range", "0.001,0.5")[1])
        down = json.loads(run(capsys, *args, "--range", "0.5,0.001")[1])
        assert down["descending"] is True
        assert up["switch_points"] == down["switch_points"]

    def test_no_switch(self, capsys):
        code, out, _ = run(capsys, "sweep", "--net", "fig3-sec5.bn", "--evidence", "fig3.ev",
                           "--param", "prior:d1", "--range", "0.2,0.5")
        assert code == 0
        assert out.strip() == "no switch in range"


class TestInputErrors:
    def test_missing_file(self, capsys):
        assert run(capsys, "update", "--net", "nowhere.bn")[0] == 1

    def test_parse_error_line(self, capsys, tmp_path):
        net = tmp_path / "bad.bn"
        net.write_text("var a 2\nprior a 0.2\nfrobnicate\n")
        code, _, err = run(capsys, "update", "--net", str(net))
        assert code == 1
        assert "line 3" in err

    def test_usage_error(self, capsys):
        with pytest.raises(SystemExit) as info:
            main(["explain"])
        assert info.value.code == 1

    def test_module_entry_point(self):
        proc = subprocess.run(
            [sys.executable, "-m", "beliefrev", "oracle", "--net", "fig3-sec5.bn", "--query", "bel:d1"],
            capture_output=True, text=True,
        )
        assert proc.returncode == 0
        assert "BEL(+d1)=0.010000" in proc.stdout
