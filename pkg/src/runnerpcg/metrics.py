"""Evaluation metrics: blockage and removal rates, recovery rate, spawn realisation,
frame-budget violations, prefab entropy and agent blocker-set overlap.

Undefined ratios (empty denominators) are returned as None so that "no data"
is never confused with a perfect score.
"""
from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterable

FRAME_BUDGETS_MS = (16.66, 33.33)


def ratio(num: float, den: float) -> float | None:
    return None if den == 0 else num / den


def rates(S_total: int, S_blocked: int, n_detected: int, n_removed: int, N_rec: int, D: float,
          O_spawned: int = 0, O_intended: int = 0) -> dict:
    r_block = ratio(S_blocked, S_total)
    return {
        "R_block": r_block,
        "R_pass": None if r_block is None else 1.0 - r_block,
        "R_remove": ratio(n_removed, n_detected),
        "R_recover": ratio(N_rec, D),
        "rho_spawn": ratio(O_spawned, O_intended),
    }


def frame_violation(samples: Iterable[float], tau: float) -> float | None:
    samples = list(samples)
    if not samples:
        return None
    return sum(1 for f in samples if f > tau) / len(samples)


def prefab_entropy(histogram: dict, K: int) -> dict:
    total = sum(histogram.values())
    if total == 0 or K < 1:
        return {"H": None, "H_norm": None, "K": K}
    H = 0.0
    for count in histogram.values():
        if count:
            p = count / total
            H -= p * math.log2(p)
    H_norm = None if K < 2 else H / math.log2(K)
    return {"H": H, "H_norm": H_norm, "K": K}


def jaccard(A: Iterable, G: Iterable) -> dict:
    A, G = set(A), set(G)
    union = A | G
    if not union:
        return {"J": None, "C_unique": None}
    J = len(A & G) / len(union)
    return {"J": J, "C_unique": 1.0 - J}


@dataclass
class MetricsAccumulator:
    S_total: int = 0
    S_blocked: int = 0
    ground_S_total: int = 0
    ground_S_blocked: int = 0
    B_detected: set = field(default_factory=set)
    B_removed: set = field(default_factory=set)
    G: set = field(default_factory=set)
    N_rec: int = 0
    unrecoverable: int = 0
    D: float = 0.0
    tiles: dict = field(default_factory=dict)  # tile_id -> [intended, spawned]
    prefab_histogram: Counter = field(default_factory=Counter)
    encounters: int = 0
    encounters_detected: int = 0
    falls: int = 0
    frame_samples: list = field(default_factory=list)

    @property
    def A(self) -> set:
        return self.B_detected

    def on_scan(self, result) -> None:
        if result.agent == "aerial":
            self.S_total += 1
            self.S_blocked += not result.passable
        else:
            self.ground_S_total += 1
            self.ground_S_blocked += not result.passable

    def on_blockage(self, agent: str, blocker_ids: Iterable[int]) -> None:
        (self.B_detected if agent == "aerial" else self.G).update(blocker_ids)

    def on_removal(self, oid: int) -> None:
        self.B_removed.add(oid)

    def on_recovery(self, status: str) -> None:
        if status == "recovered":
            self.N_rec += 1
        else:
            self.unrecoverable += 1

    def on_tile(self, tile_id: int, intended: int) -> None:
        self.tiles[tile_id] = [intended, 0]

    def on_object(self, tile_id: int, prefab_id: str) -> None:
        self.tiles[tile_id][1] += 1
        self.prefab_histogram[prefab_id] += 1

    def on_encounter(self, object_id: int) -> None:
        self.encounters += 1
        if object_id in self.B_detected or object_id in self.G:
            self.encounters_detected += 1

    def fold(self, events: Iterable) -> "MetricsAccumulator":
        """Rebuild the counters from an event stream (records or dicts with kind/payload)."""
        for ev in events:
            kind, p = (ev["kind"], ev["payload"]) if isinstance(ev, dict) else (ev.kind, ev.payload)
            if kind == "scan":
                agent_total = "S_total" if p["agent"] == "aerial" else "ground_S_total"
                agent_blocked = "S_blocked" if p["agent"] == "aerial" else "ground_S_blocked"
                setattr(self, agent_total, getattr(self, agent_total) + 1)
                setattr(self, agent_blocked, getattr(self, agent_blocked) + (not p["passable"]))
            elif kind == "blockage":
                self.on_blockage(p["agent"], p["blockers"])
            elif kind == "removal":
                self.on_removal(p["id"])
            elif kind == "recovery":
                self.on_recovery(p["status"])
            elif kind == "tile-spawned":
                if p["populate"]:
                    self.on_tile(p["tile_id"], p["intended"])
            elif kind == "object-spawned":
                self.on_object(p["tile_id"], p["prefab"])
            elif kind == "encounter":
                self.on_encounter(p["object_id"])
            elif kind == "respawn" and p["cause"] == "fall":
                self.falls += 1
            elif kind == "run-end":
                self.D = p["distance"]
        return self


def summarize(acc: MetricsAccumulator, *, entropy_classes: int, extra: dict | None = None) -> dict:
    """Per-run summary grouped by research question. Pure function of the accumulator."""
    tile_ids = sorted(acc.tiles)
    intended = [acc.tiles[t][0] for t in tile_ids]
    spawned = [acc.tiles[t][1] for t in tile_ids]
    O_int, O_sp = sum(intended), sum(spawned)
    r = rates(acc.S_total, acc.S_blocked, len(acc.B_detected), len(acc.B_removed), acc.N_rec, acc.D, O_sp, O_int)
    summary = {
        "distance": acc.D,
        "RQ1": {
            "S_total": acc.S_total,
            "S_blocked": acc.S_blocked,
            "R_block": r["R_block"],
            "R_pass": r["R_pass"],
            "B_detected": len(acc.B_detected),
            "B_removed": len(acc.B_removed),
            "R_remove": r["R_remove"],
            "removed_subset_of_detected": acc.B_removed <= acc.B_detected,
            "encounters": acc.encounters,
            "encounters_on_detected": acc.encounters_detected,
            "ground_S_total": acc.ground_S_total,
            "ground_S_blocked": acc.ground_S_blocked,
        },
        "RQ2": {
            "tiles": len(tile_ids),
            "O_intended": O_int,
            "O_spawned": O_sp,
            "rho_spawn": r["rho_spawn"],
            "mean_realized_per_tile": ratio(O_sp, len(tile_ids)),
            "rho_spawn_series": [ratio(s, i) for s, i in zip(spawned, intended)],
            "realized_series": spawned,
        },
        "RQ3": {
            "N_rec": acc.N_rec,
            "unrecoverable": acc.unrecoverable,
            "D": acc.D,
            "R_recover": r["R_recover"],
            "A": len(acc.B_detected),
            "G": len(acc.G),
            **jaccard(acc.B_detected, acc.G),
        },
        "RQ4": {
            **prefab_entropy(acc.prefab_histogram, entropy_classes),
            "prefab_histogram": dict(sorted(acc.prefab_histogram.items())),
        },
    }
    if extra:
        summary.update(extra)
    return summary


def perf_summary(samples_ms: list[float]) -> dict:
    """Wall-clock frame statistics; kept apart from the deterministic summary."""
    out = {"frames": len(samples_ms)}
    for tau in FRAME_BUDGETS_MS:
        out[f"V_{tau}"] = frame_violation(samples_ms, tau)
    out["mean_ms"] = ratio(sum(samples_ms), len(samples_ms))
    out["max_ms"] = max(samples_ms) if samples_ms else None
    return out
