"""Optional numba acceleration.

Set ``PSIEC_DISABLE_JIT=1`` to run every kernel as plain numpy/python.
``PSIEC_THREADS`` caps the worker count used by numba and by the
thread pools in the assembly routines.
"""
import os

JIT_ENABLED = os.environ.get("PSIEC_DISABLE_JIT", "0").strip().lower() not in ("1", "true", "yes")

if JIT_ENABLED:
    # the bundled TBB is too old for numba; the portable layer avoids the warning
    os.environ.setdefault("NUMBA_THREADING_LAYER", "workqueue")
    try:
        from numba import njit, prange
    except ImportError:  # pragma: no cover - numba is a declared dependency
        JIT_ENABLED = False

if not JIT_ENABLED:
    def njit(func=None, **kwargs):
        if func is not None:
            return func

        def wrapper(f):
            return f
        return wrapper

    def prange(*args):
        return range(*args)


def worker_count() -> int:
    """Number of workers allowed by ``PSIEC_THREADS`` (defaults to cpu count)."""
    cpus = os.cpu_count() or 1
    raw = os.environ.get("PSIEC_THREADS")
    if not raw:
        return cpus
    try:
        n = int(raw)
    except ValueError:
        return cpus
    return max(1, min(n, cpus))


def apply_thread_cap():
    if JIT_ENABLED:
        import numba
        numba.set_num_threads(min(worker_count(), numba.config.NUMBA_NUM_THREADS))
