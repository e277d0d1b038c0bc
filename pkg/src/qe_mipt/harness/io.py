"""Result rows, CSV/manifest writing and the resumption file."""
from __future__ import annotations

import csv
import json
import os
from dataclasses import dataclass, fields

HEADER = "experiment,L,p,q_n,q_e,observable,mean,stderr,n_samples,wall_seconds"


@dataclass(frozen=True)
class ResultRow:
    experiment: str
    L: int
    p: float
    q_n: float
    q_e: float
    observable: str
    mean: float
    stderr: float
    n_samples: int
    wall_seconds: float

    def cells(self) -> list[str]:
        return [self.experiment, str(self.L), repr(float(self.p)), repr(float(self.q_n)),
                repr(float(self.q_e)), self.observable, repr(float(self.mean)),
                repr(float(self.stderr)), str(self.n_samples), f"{self.wall_seconds:.3f}"]

    def to_json(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_json(cls, d: dict) -> "ResultRow":
        return cls(**d)


def write_results(rows, path) -> None:
    """CSV with the fixed header, rows in the given (grid) order."""
    try:
        parent = os.path.dirname(os.path.abspath(path))
        os.makedirs(parent, exist_ok=True)
        with open(path, "w", newline="") as fh:
            fh.write(HEADER + "\n")
            w = csv.writer(fh, lineterminator="\n")
            for r in rows:
                w.writerow(r.cells())
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc


def read_results(path) -> list[ResultRow]:
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        if ",".join(header) != HEADER:
            raise ValueError(f"{path}: unexpected header {header}")
        out = []
        for cells in rd:
            e, L, p, qn, qe, obs, m, se, n, w = cells
            out.append(ResultRow(e, int(L), float(p), float(qn), float(qe), obs, float(m),
                                 float(se), int(n), float(w)))
    return out


def write_json(obj, path) -> None:
    try:
        with open(path, "w") as fh:
            json.dump(obj, fh, indent=2, sort_keys=True)
            fh.write("\n")
    except OSError as exc:
        raise OSError(f"cannot write {path}: {exc}") from exc


class Progress:
    """Append-only JSON-lines file of completed grid points.

    The first line records the config hash; a file whose hash differs from the
    current config is ignored and replaced.
    """

    def __init__(self, path, config_hash: str):
        self.path = path
        self.hash = config_hash
        self.done: dict[str, list[ResultRow]] = {}
        if os.path.exists(path):
            with open(path) as fh:
                lines = [json.loads(s) for s in fh if s.strip()]
            if lines and lines[0].get("config_hash") == config_hash:
                for entry in lines[1:]:
                    self.done[entry["key"]] = [ResultRow.from_json(r) for r in entry["rows"]]
                return
        with open(path, "w") as fh:
            fh.write(json.dumps({"config_hash": config_hash, "resume_marker": True}) + "\n")

    def add(self, key: str, rows) -> None:
        with open(self.path, "a") as fh:
            fh.write(json.dumps({"key": key, "rows": [r.to_json() for r in rows]}) + "\n")
            fh.flush()
        self.done[key] = list(rows)

    def finish(self) -> None:
        if os.path.exists(self.path):
            os.remove(self.path)


__all__ = ["HEADER", "ResultRow", "write_results", "read_results", "write_json", "Progress"]
