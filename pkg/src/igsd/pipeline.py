"""End-to-end discovery: search every One-vs-Rest pass, then cut."""

from __future__ import annotations

import time
from dataclasses import dataclass
from typing import Callable

from .dataset import Dataset, TargetSpec
from .refine import refine_set
from .search import Candidate, SearchConfig, discover


@dataclass
class PassOutput:
    target: TargetSpec
    frontier: list[Candidate]
    patterns: list[Candidate]
    depth: int
    truncated: bool


@dataclass
class RunResult:
    config: SearchConfig
    passes: list[PassOutput]
    truncated: bool

    @property
    def patterns(self) -> list[Candidate]:
        return [c for p in self.passes for c in p.patterns]


def run(d: Dataset, cfg: SearchConfig, inclusive: bool = True,
        clock: Callable[[], float] = time.monotonic) -> RunResult:
    disc = discover(d, cfg, clock)
    passes = [
        PassOutput(p.target, p.frontier,
                   refine_set(d, p.target, p.frontier, disc.config.cond_list, inclusive),
                   p.depth, p.truncated)
        for p in disc.passes
    ]
    return RunResult(disc.config, passes, disc.truncated)
