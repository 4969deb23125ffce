import os

# Keep the numba-parallel engine to a predictable worker count in CI.
os.environ.setdefault("ABX_THREADS", str(os.cpu_count() or 1))
