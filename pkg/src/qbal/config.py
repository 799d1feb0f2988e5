"""Shared numeric knobs for the prover, checker and evaluator."""

from __future__ import annotations

from dataclasses import dataclass


@dataclass(frozen=True)
class Config:
    brute_bound: int = 8        # counterexample search box: components in 0..brute_bound
    prover_depth: int = 3       # saturation rounds / chaining depth of the inequality prover
    fuel: int = 1_000_000       # beta-step budget for non-affine normalization
    ext_test_size: int = 4      # enumeration bound for extensional -o realizability checks
    max_saturation: int = 2000  # hard cap on derived inequalities kept during saturation


DEFAULT = Config()
