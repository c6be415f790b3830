"""Small reference nets stored in tests/data."""

from __future__ import annotations

from pathlib import Path

from pwnet.io import parse_native

DATA = Path(__file__).parent / "data"


def load(name: str):
    return parse_native((DATA / f"{name}.pwn").read_text(encoding="utf-8"), name=name)


def fig2():
    return load("fig2")


def fig4():
    return load("notfc")


def broken():
    return load("broken")


def confused():
    return load("confused")


def fig7a():
    return load("fig7a")


def fig1_middle():
    return load("fig1_middle")
