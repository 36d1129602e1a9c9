"""Comparison schemes: the optimiser with one block pinned."""

from __future__ import annotations

import enum
from dataclasses import replace

import numpy as np

from . import optimizer
from .optimizer import RunOptions


class Method(str, enum.Enum):
    SFL = "sfl"  # unrestricted
    FF = "ff"  # fixed CPU frequencies
    FT = "ft"  # fixed transmission times
    FUP = "fup"  # fixed UAV placement

    @classmethod
    def parse(cls, text: str) -> list["Method"]:
        out = []
        for tok in text.split(","):
            tok = tok.strip().lower()
            if not tok:
                continue
            try:
                out.append(cls(tok))
            except ValueError:
                raise ValueError(f"unknown method {tok!r}; expected one of sfl,ff,ft,fup") from None
        return out


def pinned_frequency(s) -> np.ndarray:
    """Nominal clock halfway through each user's CPU range."""
    return 0.5 * (s.cpu_min + s.cpu_max)


def pinned_time(s) -> np.ndarray:
    return optimizer.max_time_eq4(s)


def pinned_placement(s) -> np.ndarray:
    return np.zeros(2)


def restricted_options(s, m: Method, options: RunOptions | None = None) -> RunOptions:
    options = options or RunOptions()
    if m is Method.SFL:
        return options
    if m is Method.FF:
        return replace(options, fixed_f=pinned_frequency(s), enforce_uav_cap=False)
    if m is Method.FT:
        return replace(options, fixed_t=pinned_time(s), enforce_uav_cap=False)
    if m is Method.FUP:
        return replace(options, fixed_q=pinned_placement(s))
    raise ValueError(m)


def run_baseline(s, m: Method | str, options: RunOptions | None = None):
    m = Method(m)
    return optimizer.run(s, restricted_options(s, m, options))
