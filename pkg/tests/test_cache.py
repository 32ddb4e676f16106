from fractions import Fraction

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from connexion import compute_coeffs, verify_recursion
from connexion.cache import (
    ENV_VAR,
    HEADER,
    CacheError,
    default_cache_path,
    dumps,
    load_or_compute,
    loads,
    read_cache,
    write_cache,
)


def test_text_format():
    text = dumps(compute_coeffs(3))
    assert text == f"{HEADER}\n1 -1 1\n2 3 4\n3 1 40\n"


@settings(max_examples=20, deadline=None)
@given(st.integers(1, 150))
def test_roundtrip(N):
    table = compute_coeffs(N)
    again = loads(dumps(table))
    assert again == table
    assert again.provenance == "cache"
    assert verify_recursion(again)


def test_roundtrip_large(tmp_path, table1000):
    path = write_cache(table1000, tmp_path / "c.txt")
    assert read_cache(path) == table1000


@pytest.mark.parametrize(
    "text",
    [
        "",
        "wrong header\n1 -1 1\n",
        f"{HEADER}\n",
        f"{HEADER}\n1 -1\n",
        f"{HEADER}\n1 -1 x\n",
        f"{HEADER}\n2 -1 1\n",
        f"{HEADER}\n1 -1 1\n1 3 4\n",
        f"{HEADER}\n1 -1 0\n",
        f"{HEADER}\n1 -1 -1\n",
        f"{HEADER}\n1 -1 1\n2 3 5\n",
    ],
)
def test_rejects_malformed_or_wrong(text):
    with pytest.raises(CacheError):
        loads(text)


def test_rejects_tampered_coefficient():
    lines = dumps(compute_coeffs(30)).splitlines()
    n, num, den = lines[20].split()
    lines[20] = f"{n} {int(num) + 1} {den}"
    with pytest.raises(CacheError, match="recursion"):
        loads("\n".join(lines))


def test_accepts_unreduced_records():
    table = loads(f"{HEADER}\n1 -2 2\n2 6 8\n3 2 80\n4 1 64\n")
    assert table.coeffs == (-1, Fraction(3, 4), Fraction(1, 40), Fraction(1, 64))


def test_load_or_compute_writes_then_reuses(tmp_path):
    path = tmp_path / "sub" / "coeffs.txt"
    table = load_or_compute(40, path)
    assert path.exists()
    assert read_cache(path) == table
    shorter = load_or_compute(25, path)
    assert shorter == compute_coeffs(25)
    assert shorter.provenance == "cache"
    assert read_cache(path).N == 40


def test_load_or_compute_extends_short_cache(tmp_path):
    path = tmp_path / "coeffs.txt"
    write_cache(compute_coeffs(10), path)
    assert load_or_compute(30, path) == compute_coeffs(30)
    assert read_cache(path).N == 30


def test_load_or_compute_replaces_corrupt_cache(tmp_path):
    path = tmp_path / "coeffs.txt"
    path.write_text("garbage\n")
    assert load_or_compute(12, path) == compute_coeffs(12)
    assert read_cache(path).N == 12


def test_load_or_compute_without_path():
    assert load_or_compute(7, None) == compute_coeffs(7)


def test_write_leaves_no_temp_files(tmp_path):
    write_cache(compute_coeffs(5), tmp_path / "c.txt")
    assert [p.name for p in tmp_path.iterdir()] == ["c.txt"]


def test_unwritable_location(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("")
    with pytest.raises(OSError):
        write_cache(compute_coeffs(3), blocker / "c.txt")


def test_default_path_honours_env(monkeypatch, tmp_path):
    monkeypatch.setenv(ENV_VAR, str(tmp_path / "x.txt"))
    assert default_cache_path() == tmp_path / "x.txt"
    monkeypatch.delenv(ENV_VAR)
    monkeypatch.setenv("XDG_CACHE_HOME", str(tmp_path))
    assert default_cache_path() == tmp_path / "connexion" / "coeffs.txt"
