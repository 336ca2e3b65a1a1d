#!/usr/bin/env python3
"""
Parsing of the range and list arguments taken by the CLI.
"""


def parse_range(text: str) -> tuple[int, int]:
    """
    Parse an inclusive range ``lo..hi`` (a single number means lo == hi).

    Raises:
        ValueError: On malformed input or lo > hi
    """
    lo_text, sep, hi_text = text.strip().partition("..")
    try:
        lo = int(lo_text)
        hi = int(hi_text) if sep else lo
    except ValueError:
        raise ValueError(f"expected a range like 2..70, got '{text}'") from None
    if lo > hi:
        raise ValueError(f"range start {lo} exceeds end {hi}")
    return lo, hi


def parse_int_list(text: str) -> list[int]:
    """Parse ``6,10`` into [6, 10]."""
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError:
        raise ValueError(f"expected comma-separated integers, got '{text}'") from None
    if not values:
        raise ValueError("expected at least one integer")
    return values


def stepped(lo: int, hi: int, step: int) -> list[int]:
    """lo, lo+step, ... up to and including hi when it falls on the grid."""
    if step < 1:
        raise ValueError("step must be positive")
    return list(range(lo, hi + 1, step))
