"""Every acceptance criterion at full Monte-Carlo scale, plus report reproducibility.

Each test prints one ``PASS``/``FAIL`` line; the lines are repeated in the
terminal summary.
"""

import json
import os
import subprocess
import sys

import pytest

from burgerslab import acceptance, rng

from .conftest import ACCEPTANCE_LINES


def _record(name, passed, detail):
    line = f"{'PASS' if passed else 'FAIL'} {name} {detail}".rstrip()
    ACCEPTANCE_LINES.append(line)
    print(line)


def _summary(data):
    parts = []
    for key, value in data.items():
        if isinstance(value, float):
            parts.append(f"{key}={value:.6g}")
        elif isinstance(value, (int, bool, str)):
            parts.append(f"{key}={value}")
    return " ".join(parts)


@pytest.mark.slow
@pytest.mark.parametrize("check", acceptance.CRITERIA, ids=lambda c: c.__name__)
def test_criterion(check):
    entry = check(rng.derive_seed(acceptance.MASTER_SEED, check.__name__), acceptance.FULL)
    _record(entry["name"], entry["pass"], _summary(entry["data"]))
    assert entry["pass"], entry["data"]


def _full_acceptance(out):
    env = dict(os.environ)
    return subprocess.run([sys.executable, "-m", "burgerslab.cli", "full-acceptance", "--quick",
                           "--out", str(out)], env=env, capture_output=True, text=True)


@pytest.mark.slow
def test_c12_report_is_byte_reproducible(tmp_path):
    out = tmp_path / "acc"
    first = _full_acceptance(out)
    assert first.returncode in (0, 2), first.stderr
    snapshot = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    second = _full_acceptance(out)
    assert second.returncode == first.returncode
    again = {p.name: p.read_bytes() for p in sorted(out.iterdir())}
    same = snapshot == again and len(snapshot) > 1
    doc = json.loads(snapshot["full-acceptance.json"])
    _record("c12_byte_reproducible", same, f"files={len(snapshot)} results={len(doc['results'])}")
    assert same
