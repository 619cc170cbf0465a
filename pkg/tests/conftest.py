"""Shared pipeline runs, cached per (geometry, framing, caps)."""
from __future__ import annotations

from functools import lru_cache

from toricfrob.localize import target3, target4
from toricfrob.potentials import Caps, build_F0_3fold, build_F0_4fold, extract_disk, extract_pieces
from toricfrob.toric import load_fan

DEFAULT_CAPS = Caps(2, 2, 1)


@lru_cache(maxsize=None)
def targets(geometry: str, f: int):
    X, X4 = load_fan(geometry, f)
    return X, X4, target3(X), target4(X4)


@lru_cache(maxsize=None)
def potentials(geometry: str, f: int, caps: Caps = DEFAULT_CAPS):
    _, _, T3, T4 = targets(geometry, f)
    return build_F0_3fold(T3, caps), build_F0_4fold(T4, caps)


@lru_cache(maxsize=None)
def disk(geometry: str, f: int, caps: Caps = DEFAULT_CAPS):
    _, F4 = potentials(geometry, f, caps)
    pieces = extract_pieces(F4, f)
    return pieces, extract_disk(pieces)


# acceptance lines, printed in the terminal summary

ACCEPTANCE: dict[int, str] = {}


def record(criterion: int, ok: bool, detail: str):
    line = f"criterion {criterion:2d}: {'pass' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE[criterion] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[k])
