"""Per-iteration run log and its CSV form."""

import csv
import time
from dataclasses import dataclass
from typing import List

CSV_HEADER = ("iter", "metric", "rounds", "words", "seconds")


@dataclass(frozen=True)
class RunRecord:
    iteration: int
    metric: float
    rounds: int
    words: int
    seconds: float


class Recorder:
    """Collects records every ``log_every`` iterations (and at the last one)."""

    def __init__(self, total, log_every=1, enabled=True):
        self.total = total
        self.log_every = log_every
        self.enabled = enabled
        self.records: List[RunRecord] = []
        self._t0 = time.perf_counter()

    def wants(self, h):
        if not self.enabled:
            return False
        return h == self.total or (self.log_every > 0 and h % self.log_every == 0)

    def add(self, h, metric, stats):
        self.records.append(RunRecord(h, float(metric), stats.rounds, stats.words,
                                      time.perf_counter() - self._t0))


def write_csv(records, path_or_stream):
    def emit(fh):
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_HEADER)
        for r in records:
            w.writerow([r.iteration, repr(r.metric), r.rounds, r.words, repr(r.seconds)])

    if hasattr(path_or_stream, "write"):
        emit(path_or_stream)
    else:
        with open(path_or_stream, "w", newline="", encoding="ascii") as fh:
            emit(fh)


def read_csv(path_or_stream) -> List[RunRecord]:
    def parse(fh):
        rows = csv.reader(fh)
        header = tuple(next(rows))
        if header != CSV_HEADER:
            raise ValueError(f"unexpected CSV header {header}")
        return [RunRecord(int(r[0]), float(r[1]), int(r[2]), int(r[3]), float(r[4]))
                for r in rows if r]

    if hasattr(path_or_stream, "read"):
        return parse(path_or_stream)
    with open(path_or_stream, newline="", encoding="ascii") as fh:
        return parse(fh)
