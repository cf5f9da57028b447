"""Access to the bundled requirements-model fixtures under fixtures/."""

from __future__ import annotations

import os
from pathlib import Path

from .model import RequirementsModel
from .parser import SourceFile, parse_model
from .pipeline import BuildError, build_from_paths
from .decomposer import CompiledModel

FIXTURE_FILES = {
    "atm": "atm.rqm",
    "mini_cocome": "mini_cocome.rqm",
    "libms_subset": "libms_subset.rqm",
    "loanps_subset": "loanps_subset.rqm",
    "cash_payment_missing_guard": "cash_payment_missing_guard.rqm",
    "withdraw_wrong_guard": "withdraw_wrong_guard.rqm",
    "end_sale_sign_typo": "end_sale_sign_typo.rqm",
}

BASE_FIXTURES = ("atm", "mini_cocome", "libms_subset", "loanps_subset")
FAULTY_FIXTURES = ("cash_payment_missing_guard", "withdraw_wrong_guard", "end_sale_sign_typo")

FAULTY_BASE = {
    "cash_payment_missing_guard": "mini_cocome",
    "withdraw_wrong_guard": "atm",
    "end_sale_sign_typo": "mini_cocome",
}


def fixtures_dir() -> Path:
    override = os.environ.get("REQEXEC_FIXTURES")
    if override:
        return Path(override)
    return Path(__file__).resolve().parents[2] / "fixtures"


def _canonical(name: str) -> str:
    squashed = name.replace("_", "").replace("-", "").lower()
    for known in FIXTURE_FILES:
        if known.replace("_", "") == squashed:
            return known
    raise KeyError(f"unknown fixture {name!r}; known: {', '.join(sorted(FIXTURE_FILES))}")


def fixture_path(name: str) -> Path:
    return fixtures_dir() / FIXTURE_FILES[_canonical(name)]


def load_fixture(name: str) -> RequirementsModel:
    """Parse a bundled fixture; raises if it has any diagnostic."""
    path = fixture_path(name)
    result = parse_model([SourceFile(str(path), path.read_text(encoding="utf-8"))])
    if not result.ok or result.diagnostics:
        raise BuildError([str(d) for d in result.diagnostics])
    return result.model


def build_fixture(name: str, include_crud: bool = True) -> CompiledModel:
    return build_from_paths([fixture_path(name)], include_crud)
