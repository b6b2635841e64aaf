"""One-shot sandboxed executor for untrusted candidate programs.

Protocol: a single JSON request on stdin

    {"source": str, "timeout_s": number, "memory_mb": number?}

and a single JSON verdict on stdout

    {"status": "passed"|"failed"|"timeout"|"error",
     "stderr_tail": str, "duration_ms": int}

The program runs as a fresh interpreter in a throwaway temp directory
with its own process group; the wall-clock deadline is enforced with an
immediate SIGKILL of the whole group. Where the platform allows
unprivileged user namespaces, the child is wrapped in `unshare -rn` so it
has no network. Exit code 0 means a verdict was produced (a failing
candidate is not a runner failure); 2 means the request was malformed.
"""

from __future__ import annotations

import json
import os
import shutil
import signal
import subprocess
import sys
import tempfile
import time

STDERR_TAIL_CHARS = 2000

_unshare_works: bool | None = None


def _network_isolation_prefix() -> list[str]:
    """`unshare -rn` prefix when unprivileged namespaces are available."""
    global _unshare_works
    if _unshare_works is None:
        try:
            probe = subprocess.run(
                ["unshare", "-rn", "true"],
                stdout=subprocess.DEVNULL, stderr=subprocess.DEVNULL,
                timeout=5)
            _unshare_works = probe.returncode == 0
        except (OSError, subprocess.TimeoutExpired):
            _unshare_works = False
    return ["unshare", "-rn"] if _unshare_works else []


def _limit_resources(memory_mb: int | None):
    def apply():
        import resource
        resource.setrlimit(resource.RLIMIT_CORE, (0, 0))
        if memory_mb is not None:
            limit = memory_mb * 1024 * 1024
            resource.setrlimit(resource.RLIMIT_AS, (limit, limit))
    return apply


def _tail(raw: bytes) -> str:
    return raw.decode("utf-8", errors="replace")[-STDERR_TAIL_CHARS:]


def execute(source: str, timeout_s: float, memory_mb: int | None = None) -> dict:
    """Run one candidate program and report a structured verdict."""
    workdir = tempfile.mkdtemp(prefix="sandbox-run-")
    program = os.path.join(workdir, "program.py")
    started = time.monotonic()
    try:
        with open(program, "w", encoding="utf-8") as fh:
            fh.write(source)
        command = _network_isolation_prefix() + [sys.executable, "-I", program]
        env = {
            "PATH": os.environ.get("PATH", "/usr/bin:/bin"),
            "HOME": workdir,
            "TMPDIR": workdir,
            "PYTHONIOENCODING": "utf-8",
        }
        try:
            proc = subprocess.Popen(
                command, cwd=workdir, env=env,
                stdin=subprocess.DEVNULL, stdout=subprocess.PIPE,
                stderr=subprocess.PIPE, start_new_session=True,
                preexec_fn=_limit_resources(memory_mb))
        except OSError as exc:
            return {"status": "error", "stderr_tail": str(exc)[-STDERR_TAIL_CHARS:],
                    "duration_ms": 0}
        try:
            _, stderr = proc.communicate(timeout=timeout_s)
            duration_ms = int((time.monotonic() - started) * 1000)
            status = "passed" if proc.returncode == 0 else "failed"
            return {"status": status, "stderr_tail": _tail(stderr),
                    "duration_ms": duration_ms}
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, signal.SIGKILL)
            except ProcessLookupError:
                pass
            _, stderr = proc.communicate()
            duration_ms = int((time.monotonic() - started) * 1000)
            return {"status": "timeout", "stderr_tail": _tail(stderr),
                    "duration_ms": duration_ms}
    finally:
        shutil.rmtree(workdir, ignore_errors=True)


def _parse_request(raw: str) -> tuple[str, float, int | None]:
    request = json.loads(raw)
    if not isinstance(request, dict):
        raise ValueError("request must be a JSON object")
    source = request.get("source")
    timeout_s = request.get("timeout_s")
    if not isinstance(source, str):
        raise ValueError("source must be a string")
    if not isinstance(timeout_s, (int, float)) or timeout_s <= 0:
        raise ValueError("timeout_s must be a positive number")
    memory_mb = request.get("memory_mb")
    if memory_mb is not None and not isinstance(memory_mb, int):
        raise ValueError("memory_mb must be an integer")
    return source, float(timeout_s), memory_mb


def main() -> int:
    try:
        source, timeout_s, memory_mb = _parse_request(sys.stdin.read())
    except (ValueError, json.JSONDecodeError) as exc:
        print(json.dumps({"error": f"bad request: {exc}"}))
        return 2
    verdict = execute(source, timeout_s, memory_mb)
    print(json.dumps(verdict))
    return 0


if __name__ == "__main__":
    sys.exit(main())
