"""Plain-text coefficient cache.

Format (UTF-8, one record per line)::

    connexion-coeffs v1
    1 -1 1
    2 3 4
    3 1 40
    ...

Each record is ``<n> <numerator> <denominator>`` in base 10 with the fraction
in lowest terms.  A cache is only accepted after the recursion has been
re-checked on the loaded table.
"""

from __future__ import annotations

import os
import tempfile
from pathlib import Path

from .exact import CoeffTable, compute_coeffs, int_str, str_int, verify_recursion

HEADER = "connexion-coeffs v1"
ENV_VAR = "CONNEXION_CACHE"


class CacheError(ValueError):
    pass


def default_cache_path() -> Path:
    env = os.environ.get(ENV_VAR)
    if env:
        return Path(env)
    base = os.environ.get("XDG_CACHE_HOME") or Path.home() / ".cache"
    return Path(base) / "connexion" / "coeffs.txt"


def dumps(table: CoeffTable) -> str:
    lines = [HEADER]
    for n, (num, den) in enumerate(table.pairs(), start=1):
        lines.append(f"{n} {int_str(num)} {int_str(den)}")
    return "\n".join(lines) + "\n"


def loads(text: str) -> CoeffTable:
    lines = text.splitlines()
    if not lines or lines[0].strip() != HEADER:
        raise CacheError(f"missing header {HEADER!r}")
    pairs = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip():
            continue
        parts = line.split()
        if len(parts) != 3:
            raise CacheError(f"line {lineno}: expected '<n> <numerator> <denominator>'")
        try:
            n, num, den = (str_int(p) for p in parts)
        except ValueError:
            raise CacheError(f"line {lineno}: not an integer record") from None
        if n != len(pairs) + 1:
            raise CacheError(f"line {lineno}: index {n}, expected {len(pairs) + 1}")
        if den <= 0:
            raise CacheError(f"line {lineno}: denominator must be positive")
        pairs.append((num, den))
    if not pairs:
        raise CacheError("cache holds no coefficients")
    table = CoeffTable.from_pairs(pairs, provenance="cache")
    if not verify_recursion(table):
        raise CacheError("cached coefficients fail the recursion check")
    return table


def write_cache(table: CoeffTable, path: str | os.PathLike) -> Path:
    """Write atomically (temp file then rename)."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=".coeffs-", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(dumps(table))
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def read_cache(path: str | os.PathLike) -> CoeffTable:
    return loads(Path(path).read_text(encoding="utf-8"))


def load_or_compute(N: int, path: str | os.PathLike | None) -> CoeffTable:
    """Table b_1..b_N, served from the cache when it is long enough.

    A missing, short or invalid cache is (re)written with a fresh table.
    """
    if path is None:
        return compute_coeffs(N)
    path = Path(path)
    if path.exists():
        try:
            cached = read_cache(path)
        except CacheError:
            cached = None
        if cached is not None and cached.N >= N:
            return cached.truncated(N)
    table = compute_coeffs(N)
    write_cache(table, path)
    return table
