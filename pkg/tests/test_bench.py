"""Benchmark harness and backend-selection helpers."""

import subprocess
import sys

from stl2vec.accel import HAVE_NUMBA, backend_name, env_flag, worker_count
from stl2vec.bench import benchmark, render


def test_benchmark_rows():
    rows = benchmark(lengths=(64, 128), window=4, reps=2, seed=0)
    assert len(rows) == 2 * 3
    names = [r[0] for r in rows]
    assert names[:3] == ["window_max", "window_min", "until_scan"]
    for name, T, t_np, t_jit, speedup in rows:
        assert T in (64, 128)
        assert t_np > 0.0
        if HAVE_NUMBA:
            assert t_jit > 0.0 and abs(speedup - t_np / t_jit) < 1e-12
        else:
            assert t_jit is None and speedup is None


def test_render_table():
    rows = benchmark(lengths=(64,), window=4, reps=2)
    text = render(rows)
    assert text.splitlines()[0].startswith("backend: %s" % backend_name())
    assert "kernel" in text and "numpy ms" in text
    for name in ("window_max", "window_min", "until_scan"):
        assert name in text


def test_env_flag_parsing(monkeypatch):
    monkeypatch.delenv("SOME_FLAG", raising=False)
    assert env_flag("SOME_FLAG", True) is True
    assert env_flag("SOME_FLAG", False) is False
    for off in ("0", "false", "NO", " Off ", ""):
        monkeypatch.setenv("SOME_FLAG", off)
        assert env_flag("SOME_FLAG", True) is False
    for on in ("1", "true", "yes", "anything"):
        monkeypatch.setenv("SOME_FLAG", on)
        assert env_flag("SOME_FLAG", False) is True


def test_worker_count(monkeypatch):
    monkeypatch.delenv("STL2VEC_WORKERS", raising=False)
    assert worker_count(3) == 3
    monkeypatch.setenv("STL2VEC_WORKERS", "5")
    assert worker_count(1) == 5
    monkeypatch.setenv("STL2VEC_WORKERS", "0")
    assert worker_count(2) == 2
    monkeypatch.setenv("STL2VEC_WORKERS", "junk")
    assert worker_count(4) == 4


def test_numba_opt_out_env():
    # a fresh interpreter with STL2VEC_NUMBA=0 must report the numpy backend
    code = ("import stl2vec.accel as a; "
            "print(a.HAVE_NUMBA, a.backend_name())")
    out = subprocess.run(
        [sys.executable, "-c", code],
        env={"PATH": "/usr/bin:/bin", "STL2VEC_NUMBA": "0",
             "PYTHONPATH": ":".join(sys.path)},
        capture_output=True, text=True, check=True)
    assert out.stdout.split() == ["False", "numpy"]
