"""Durable annotation store: append-only journal with periodic snapshots.

Every label or resolution write is appended (and flushed) to
``journal.jsonl`` before it is acknowledged; a ``snapshot.json`` of the
applied state is written every SNAPSHOT_EVERY writes so restarts replay only
the journal tail.  The journal is never truncated, which preserves the full
audit trail including overwritten labels.

Writes are serialized through a single lock; reads work on plain dict
snapshots and need no locking discipline beyond the GIL.
"""

from __future__ import annotations

import json
import os
import threading
from datetime import datetime, timezone
from pathlib import Path
SNAPSHOT_EVERY = 100

JOURNAL_FILE = "journal.jsonl"
SNAPSHOT_FILE = "snapshot.json"


class AnnotationStore:
    def __init__(self, directory):
        self.directory = Path(directory)
        self.directory.mkdir(parents=True, exist_ok=True)
        self._lock = threading.Lock()
        self._seq = 0
        self._snapshot_seq = 0
        # (sample_id, post_id, annotator_id) -> class_id
        self._labels: dict[tuple[str, str, str], str] = {}
        # (sample_id, post_id) -> class_id
        self._resolutions: dict[tuple[str, str], str] = {}
        self._load()
        self._journal = open(self.journal_path, "a", encoding="utf-8")

    @property
    def journal_path(self) -> Path:
        return self.directory / JOURNAL_FILE

    @property
    def snapshot_path(self) -> Path:
        return self.directory / SNAPSHOT_FILE

    # -- persistence -----------------------------------------------------

    def _load(self) -> None:
        if self.snapshot_path.exists():
            with open(self.snapshot_path, "r", encoding="utf-8") as fh:
                snap = json.load(fh)
            self._snapshot_seq = snap["seq"]
            self._seq = snap["seq"]
            self._labels = {
                (e["sample"], e["post"], e["annotator"]): e["class"]
                for e in snap["labels"]
            }
            self._resolutions = {
                (e["sample"], e["post"]): e["class"] for e in snap["resolutions"]
            }
        if self.journal_path.exists():
            with open(self.journal_path, "r", encoding="utf-8") as fh:
                for line in fh:
                    line = line.strip()
                    if not line:
                        continue
                    entry = json.loads(line)
                    if entry["seq"] <= self._snapshot_seq:
                        continue
                    self._apply(entry)
                    self._seq = entry["seq"]

    def _apply(self, entry: dict) -> None:
        if entry["op"] == "label":
            self._labels[
                (entry["sample"], entry["post"], entry["annotator"])
            ] = entry["class"]
        elif entry["op"] == "resolve":
            self._resolutions[(entry["sample"], entry["post"])] = entry["class"]

    def _append(self, entry: dict) -> None:
        self._seq += 1
        entry["seq"] = self._seq
        entry["ts"] = datetime.now(timezone.utc).isoformat()
        self._journal.write(json.dumps(entry, sort_keys=True) + "\n")
        self._journal.flush()
        os.fsync(self._journal.fileno())
        self._apply(entry)
        if self._seq - self._snapshot_seq >= SNAPSHOT_EVERY:
            self._write_snapshot()

    def _write_snapshot(self) -> None:
        snap = {
            "seq": self._seq,
            "labels": [
                {"sample": s, "post": p, "annotator": a, "class": c}
                for (s, p, a), c in sorted(self._labels.items())
            ],
            "resolutions": [
                {"sample": s, "post": p, "class": c}
                for (s, p), c in sorted(self._resolutions.items())
            ],
        }
        tmp = self.snapshot_path.with_suffix(".tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(snap, fh)
            fh.flush()
            os.fsync(fh.fileno())
        os.replace(tmp, self.snapshot_path)
        self._snapshot_seq = self._seq

    def close(self) -> None:
        self._journal.close()

    # -- writes ------------------------------------------------------------

    def set_label(
        self, sample_id: str, annotator_id: str, post_id: str, class_id: str
    ) -> bool:
        """Persist a label; returns True when it overwrote an earlier one.

        Re-submitting the same (sample, post, annotator) key overwrites in
        the applied state while the journal keeps both entries as audit.
        """
        with self._lock:
            key = (sample_id, post_id, annotator_id)
            overwrote = key in self._labels
            self._append(
                {
                    "op": "label",
                    "sample": sample_id,
                    "post": post_id,
                    "annotator": annotator_id,
                    "class": class_id,
                }
            )
            return overwrote

    def set_resolution(self, sample_id: str, post_id: str, class_id: str) -> None:
        with self._lock:
            self._append(
                {
                    "op": "resolve",
                    "sample": sample_id,
                    "post": post_id,
                    "class": class_id,
                }
            )

    # -- reads ---------------------------------------------------------------

    def labels_for_sample(self, sample_id: str) -> dict[tuple[str, str], str]:
        """(post_id, annotator_id) -> class_id for one sample."""
        return {
            (p, a): c
            for (s, p, a), c in self._labels.items()
            if s == sample_id
        }

    def labels_by_annotator(self, sample_id: str, annotator_id: str) -> dict[str, str]:
        return {
            p: c
            for (s, p, a), c in self._labels.items()
            if s == sample_id and a == annotator_id
        }

    def annotators_for_sample(self, sample_id: str) -> list[str]:
        return sorted(
            {a for (s, _, a) in self._labels if s == sample_id}
        )

    def resolutions_for_sample(self, sample_id: str) -> dict[str, str]:
        return {
            p: c for (s, p), c in self._resolutions.items() if s == sample_id
        }

    def label_count(self, sample_id: str, post_id: str) -> int:
        return sum(
            1 for (s, p, _) in self._labels if s == sample_id and p == post_id
        )
