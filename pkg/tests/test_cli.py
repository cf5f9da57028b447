"""Command-line contract: exit codes, output shapes, REPL behavior,
the serve lifecycle, and the tolerance override."""

import json
import os
import signal
import socket
import subprocess
import sys
import time
import urllib.request

from conftest import REPO
from reqexec.analyzer import parse_structured_report
from reqexec.fixtures import fixture_path

ATM = str(fixture_path("atm"))
COCOME = str(fixture_path("mini_cocome"))
ALL_FOUR = [ATM, COCOME, str(fixture_path("libms_subset")), str(fixture_path("loanps_subset"))]


def run_cli(*argv, stdin=None, env=None):
    full_env = dict(os.environ)
    if env:
        full_env.update(env)
    return subprocess.run(
        [sys.executable, "-m", "reqexec.cli", *argv],
        input=stdin, capture_output=True, text=True, env=full_env, cwd=str(REPO))


class TestCheck:
    def test_atm_fully_executable(self):
        proc = run_cli("check", ATM)
        assert proc.returncode == 0
        assert "15/15 executable (100.0%)" in proc.stdout

    def test_hooked_model_warns_but_exits_zero(self):
        proc = run_cli("check", COCOME)
        assert proc.returncode == 0
        assert "warning:" in proc.stdout
        assert "Sorting_ascendingByStock" in proc.stdout

    def test_syntax_error_exits_one(self, tmp_path):
        bad = tmp_path / "bad.rqm"
        bad.write_text("class {", encoding="utf-8")
        proc = run_cli("check", str(bad))
        assert proc.returncode == 1
        assert "error:" in proc.stdout

    def test_trace_output_format(self):
        proc = run_cli("check", COCOME, "--trace")
        assert proc.returncode == 0
        lines = proc.stdout.splitlines()
        idx = lines.index("ProcessSale::enterItem")
        assert lines[idx + 1].startswith("#1 R3 ")
        assert any(l.startswith("#7 R21[session] ") for l in lines[idx:idx + 16])

    def test_trace_to_file(self, tmp_path):
        out = tmp_path / "trace.txt"
        proc = run_cli("check", ATM, "--trace", str(out))
        assert proc.returncode == 0
        assert "OpenAccount::openAccount" in out.read_text()


class TestMetrics:
    def test_text_table(self):
        proc = run_cli("metrics", ATM)
        assert proc.returncode == 0
        for fragment in ("actors             2", "use cases          6",
                         "system operations  15", "entity classes     3",
                         "associations       4", "invariants         5"):
            assert fragment in proc.stdout

    def test_structured_round_trip(self):
        proc = run_cli("metrics", ATM, "--format", "structured")
        metrics = parse_structured_report(proc.stdout)
        assert metrics.system_operations == 15

    def test_include_crud_recount(self):
        base = parse_structured_report(
            run_cli("metrics", COCOME, "--format", "structured").stdout)
        crud = parse_structured_report(
            run_cli("metrics", COCOME, "--format", "structured", "--include-crud").stdout)
        assert crud.system_operations == base.system_operations + 4


class TestBench:
    def test_all_four_fixtures_fast(self):
        t0 = time.perf_counter()
        proc = run_cli("bench", *ALL_FOUR)
        assert proc.returncode == 0
        total_line = [l for l in proc.stdout.splitlines() if l.startswith("total:")][0]
        total_ms = float(total_line.split()[1])
        assert total_ms < 5000.0
        assert time.perf_counter() - t0 < 30

    def test_reports_two_decimal_milliseconds(self):
        proc = run_cli("bench", ATM)
        line = proc.stdout.splitlines()[0]
        assert line.startswith(f"{ATM}: ")
        assert line.endswith(" ms")
        float(line.split()[1])


class TestRun:
    def test_scripted_transcript(self):
        stdin = ('invoke ManageStore createStore 1 "UMStore" "Taipa"\n'
                 "state\nexit\n")
        proc = run_cli("run", COCOME, stdin=stdin)
        assert proc.returncode == 0
        assert "> invoke ManageStore createStore 1 \"UMStore\" \"Taipa\"\nok true" in proc.stdout
        assert "Store: 1" in proc.stdout

    def test_guard_violation_printed(self):
        stdin = 'invoke ProcessSale enterItem "B1" 1.0\nexit\n'
        proc = run_cli("run", COCOME, stdin=stdin)
        assert "precondition violated:" in proc.stdout

    def test_save_then_load_restores_counts(self, tmp_path):
        ckpt = tmp_path / "state.ckpt"
        stdin = (f'invoke ManageStore createStore 1 "A" "B"\n'
                 f"save {ckpt}\n"
                 f'invoke ManageStore createStore 2 "C" "D"\n'
                 f"load {ckpt}\nstate\nexit\n")
        proc = run_cli("run", COCOME, stdin=stdin)
        assert proc.returncode == 0
        assert "Store: 1" in proc.stdout.split(f"loaded {ckpt}")[1]

    def test_checkpoint_flag(self, tmp_path):
        ckpt = tmp_path / "boot.ckpt"
        run_cli("run", COCOME,
                stdin=f'invoke ManageStore createStore 7 "X" "Y"\nsave {ckpt}\nexit\n')
        proc = run_cli("run", COCOME, "--checkpoint", str(ckpt), stdin="state Store\nexit\n")
        assert "StoreId=7" in proc.stdout

    def test_tolerance_env_override(self):
        # under a huge tolerance, -0.4 still satisfies Amount >= 0
        strict = run_cli("run", str(fixture_path("end_sale_sign_typo")),
                         stdin="invoke ProcessSale makeNewSale\ninvoke ProcessSale endSale 0.4\nexit\n")
        assert "RED" in strict.stdout
        loose = run_cli("run", str(fixture_path("end_sale_sign_typo")),
                        stdin="invoke ProcessSale makeNewSale\ninvoke ProcessSale endSale 0.4\nexit\n",
                        env={"REQEXEC_TOLERANCE": "10"})
        assert "RED" not in loose.stdout


def _free_port() -> int:
    s = socket.socket()
    s.bind(("127.0.0.1", 0))
    port = s.getsockname()[1]
    s.close()
    return port


class TestServe:
    def test_serves_model_and_stops_on_sigterm(self):
        port = _free_port()
        proc = subprocess.Popen(
            [sys.executable, "-m", "reqexec.cli", "serve", ATM, "--port", str(port)],
            stdout=subprocess.PIPE, stderr=subprocess.PIPE, text=True, cwd=str(REPO))
        try:
            deadline = time.time() + 10
            body = None
            while time.time() < deadline:
                try:
                    with urllib.request.urlopen(
                            f"http://127.0.0.1:{port}/model", timeout=1) as resp:
                        body = json.loads(resp.read())
                    break
                except OSError:
                    time.sleep(0.1)
            assert body is not None and len(body["useCases"]) == 6
        finally:
            proc.send_signal(signal.SIGTERM)
            code = proc.wait(timeout=10)
        assert code == 0

    def test_busy_port_exits_two(self):
        blocker = socket.socket()
        blocker.bind(("127.0.0.1", 0))
        blocker.listen(1)
        port = blocker.getsockname()[1]
        try:
            proc = run_cli("serve", ATM, "--port", str(port))
            assert proc.returncode == 2
            assert "cannot bind" in proc.stdout
        finally:
            blocker.close()

    def test_model_error_exits_one(self, tmp_path):
        bad = tmp_path / "bad.rqm"
        bad.write_text("contract ::", encoding="utf-8")
        proc = run_cli("serve", str(bad))
        assert proc.returncode == 1


def test_bench_repeat_runs_same_order_of_magnitude():
    a = run_cli("bench", ATM)
    b = run_cli("bench", ATM)
    ta = float([l for l in a.stdout.splitlines() if l.startswith("total:")][0].split()[1])
    tb = float([l for l in b.stdout.splitlines() if l.startswith("total:")][0].split()[1])
    assert ta > 0 and tb > 0
    assert max(ta, tb) / min(ta, tb) < 10
