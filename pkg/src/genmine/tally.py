"""Record-level error accounting shared by all pipeline stages.

Stages skip bad records instead of aborting; every skip is tallied here so
a run's manifest can report exactly what was dropped and why.
"""

from __future__ import annotations

from collections import Counter

# Keep only this many example details per reason to bound memory on long runs.
_MAX_SAMPLES_PER_REASON = 20


class RunTally:
    """Counts skipped records by reason and keeps a few example details."""

    def __init__(self):
        self.counts: Counter[str] = Counter()
        self.samples: dict[str, list[dict]] = {}

    def record(self, reason: str, **detail) -> None:
        self.counts[reason] += 1
        bucket = self.samples.setdefault(reason, [])
        if len(bucket) < _MAX_SAMPLES_PER_REASON:
            bucket.append(detail)

    def merge(self, other: "RunTally") -> None:
        self.counts.update(other.counts)
        for reason, details in other.samples.items():
            bucket = self.samples.setdefault(reason, [])
            for d in details:
                if len(bucket) >= _MAX_SAMPLES_PER_REASON:
                    break
                bucket.append(d)

    def total(self) -> int:
        return sum(self.counts.values())

    def as_dict(self) -> dict:
        return {
            "counts": dict(sorted(self.counts.items())),
            "samples": {k: v for k, v in sorted(self.samples.items())},
        }

    def __repr__(self):
        return f"RunTally({dict(self.counts)})"
