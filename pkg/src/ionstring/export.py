"""Deterministic CSV/JSON serialization helpers.

Numbers are written with 12 significant digits so that repeated runs
of the same seeded experiment produce byte-identical files. Writers
go through a temporary file and an atomic rename, so a failed run
never leaves a partial output behind.
"""

from __future__ import annotations

import csv
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ionstring.chain import ModeSpectrum
from ionstring.coupling import CouplingMatrix

SIG_DIGITS = 12


def fmt(value) -> str:
    """Render a number with 12 significant digits."""
    if isinstance(value, (bool, np.bool_)):
        return str(bool(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    return format(float(value), f".{SIG_DIGITS}g")


def _round_floats(obj):
    if isinstance(obj, dict):
        return {k: _round_floats(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_round_floats(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_round_floats(v) for v in obj.tolist()]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(fmt(obj))
    return obj


def _atomic_write(path, text: str):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as handle:
            handle.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_csv(path, header: list[str], rows):
    """Write rows of numbers (or strings) with deterministic formatting."""
    import io

    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([v if isinstance(v, str) else fmt(v) for v in row])
    _atomic_write(path, buffer.getvalue())


def write_json(path, payload: dict):
    """Write a JSON document with rounded floats and sorted keys."""
    text = json.dumps(_round_floats(payload), indent=2, sort_keys=True)
    _atomic_write(path, text + "\n")


def mode_spectrum_rows(spectrum: ModeSpectrum):
    header = ["mode", "frequency_hz"] + [
        f"b_ion{i + 1}" for i in range(spectrum.ion_count)
    ]
    rows = []
    for m in range(spectrum.frequencies.size):
        rows.append(
            [m, spectrum.frequencies[m] / (2.0 * np.pi), *spectrum.eigenvectors[:, m]]
        )
    return header, rows


def write_mode_spectrum_csv(spectrum: ModeSpectrum, path):
    header, rows = mode_spectrum_rows(spectrum)
    write_csv(path, header, rows)


def mode_spectrum_dict(spectrum: ModeSpectrum) -> dict:
    out = {
        "direction": spectrum.direction,
        "frequencies_hz": (spectrum.frequencies / (2.0 * np.pi)).tolist(),
        "eigenvectors": spectrum.eigenvectors.tolist(),
        "ion_mass_kg": spectrum.ion_mass,
    }
    if spectrum.lamb_dicke is not None:
        out["lamb_dicke"] = spectrum.lamb_dicke.tolist()
    return out


def write_coupling_csv(coupling: CouplingMatrix, path):
    n = coupling.ion_count
    header = [f"j_ion{k + 1}_rad_s" for k in range(n)]
    write_csv(path, header, coupling.j.tolist())


def coupling_dict(coupling: CouplingMatrix, metadata: dict | None = None) -> dict:
    out = {
        "j_rad_s": coupling.j.tolist(),
        "field_b_rad_s": coupling.field_b,
    }
    if metadata:
        out["metadata"] = metadata
    return out
