"""Acceptance criteria at their stated tolerances, one verdict line per criterion.

Red criteria fail here on purpose; the measured value is printed with the verdict.
"""

import pytest

from iholab.acceptance import CRITERIA
from iholab.cli import main


@pytest.mark.parametrize("check", CRITERIA, ids=lambda f: f.__name__)
def test_criterion(check, capsys):
    result = check()
    with capsys.disabled():
        print("\n" + result.line())
    assert result.passed, result.line()


def test_all_command_is_byte_identical(tmp_path, monkeypatch, capsys):
    # the literal form of the determinism criterion: two full `all` runs
    arts = []
    for sub in ("a", "b"):
        root = tmp_path / sub
        root.mkdir()
        monkeypatch.setenv("IOL_SEED_DIR", str(root))
        main(["all"])
        arts.append((root / "all.csv").read_bytes())
    capsys.readouterr()
    assert arts[0] == arts[1]
