"""Plain-text and JSON serialization.

Floats are written with ``repr`` so every value round-trips bit for bit.
Idealized datasets leave the ``trials`` and ``no_clicks`` columns empty.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .detection import EfficiencyGrid, NoClickCurve
from .simulate import NoClickDataset
from .states import PhotonDistribution

DATASET_HEADER = ["eta", "trials", "no_clicks", "freq"]


def _fmt(x) -> str:
    return repr(float(x))


def write_table(path, header, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(header)
        w.writerows(rows)


def _read_rows(path, header):
    with Path(path).open(newline="") as fh:
        r = csv.reader(fh)
        got = next(r, None)
        if got is None or [h.strip() for h in got] != header:
            raise ValueError(f"{path}: expected header {','.join(header)}, got {got}")
        return [row for row in r if row]


def write_distribution(path, dist: PhotonDistribution):
    write_table(path, ["k", "prob"], ((k, _fmt(p)) for k, p in enumerate(dist.probs)))


def read_distribution(path) -> PhotonDistribution:
    rows = _read_rows(path, ["k", "prob"])
    ks = [int(r[0]) for r in rows]
    if ks != list(range(len(ks))):
        raise ValueError(f"{path}: k column must run 0..n")
    return PhotonDistribution(np.array([float(r[1]) for r in rows]))


def distribution_doc(dist: PhotonDistribution) -> dict:
    return {"n_max": dist.n_max, "epsilon": dist.epsilon,
            "truncation_deficit": dist.truncation_deficit, "probs": dist.probs.tolist()}


def distribution_from_doc(doc: dict) -> PhotonDistribution:
    probs = np.asarray(doc["probs"], dtype=float)
    if "n_max" in doc and doc["n_max"] != probs.size - 1:
        raise ValueError("n_max disagrees with the probability vector")
    return PhotonDistribution(probs, doc.get("truncation_deficit", 0.0), doc.get("epsilon"))


def write_curve(path, etas, probs):
    write_table(path, ["eta", "P"], ((_fmt(e), _fmt(p)) for e, p in zip(etas, probs)))


def write_noclick_curve(path, curve: NoClickCurve):
    write_curve(path, curve.grid.etas, curve.probs)


def read_curve(path):
    rows = _read_rows(path, ["eta", "P"])
    return np.array([float(r[0]) for r in rows]), np.array([float(r[1]) for r in rows])


def write_dataset(path, data: NoClickDataset):
    rows = []
    for i, (eta, f) in enumerate(zip(data.etas, data.freqs)):
        if data.is_exact:
            rows.append((_fmt(eta), "", "", _fmt(f)))
        else:
            rows.append((_fmt(eta), int(data.trials[i]), int(data.no_clicks[i]), _fmt(f)))
    write_table(path, DATASET_HEADER, rows)


def read_dataset(path) -> NoClickDataset:
    rows = _read_rows(path, DATASET_HEADER)
    grid = EfficiencyGrid(np.array([float(r[0]) for r in rows]))
    has_counts = [bool(r[1].strip()) for r in rows]
    if all(has_counts):
        trials = np.array([int(r[1]) for r in rows], dtype=np.int64)
        no_clicks = np.array([int(r[2]) for r in rows], dtype=np.int64)
        return NoClickDataset.from_counts(grid, trials, no_clicks)
    if any(has_counts):
        raise ValueError(f"{path}: counts must be given for all rows or none")
    return NoClickDataset(grid, np.array([float(r[3]) for r in rows]))


def write_json(path, doc):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path):
    return json.loads(Path(path).read_text())
