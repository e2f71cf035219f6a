"""Deterministic file output: CSV tables, JSON reports, the run manifest and the basis cache.

Floats are written with 17 significant digits, so every value round-trips
exactly and reruns with the same inputs produce identical bytes.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

import numpy as np

from . import __version__
from .eigensolver import Basis
from .params import ScaledSystem


def format_value(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return str(int(value))
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def write_csv(path, header, rows, footer=()) -> Path:
    """Write a header line, one line per row and optional ``# key,value`` footer lines."""
    path = Path(path)
    with path.open("w", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(format_value(v) for v in row) + "\n")
        for key, value in footer:
            fh.write(f"# {key},{format_value(value)}\n")
    return path


def read_csv(path):
    """Header, data rows (as strings) and footer dict of a file written by :func:`write_csv`."""
    lines = Path(path).read_text().splitlines()
    header = lines[0].split(",")
    rows, footer = [], {}
    for line in lines[1:]:
        if line.startswith("# "):
            key, value = line[2:].split(",", 1)
            footer[key] = value
        elif line:
            rows.append(line.split(","))
    return header, rows, footer


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return float(obj) if np.isfinite(obj) else None  # JSON has no NaN/inf
    return obj


def write_json(path, obj) -> Path:
    path = Path(path)
    path.write_text(json.dumps(_jsonable(obj), indent=2, sort_keys=True, allow_nan=False) + "\n")
    return path


def sha256_file(path) -> str:
    h = hashlib.sha256()
    with Path(path).open("rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


# ---------------------------------------------------------------- artifacts

def write_eigenvalues(path, basis: Basis) -> Path:
    rows = zip(range(len(basis)), basis.parity, basis.E_prime, basis.E_eV, basis.K)
    return write_csv(path, ["n", "parity", "E_prime", "E_eV", "K_per_m"], rows)


def write_eigenstates(path, basis: Basis) -> Path:
    header = ["u"] + [f"psi_{n}" for n in range(len(basis))]
    table = np.column_stack([basis.u, basis.psi.T])
    return write_csv(path, header, table)


def write_coefficients(path, coeffs) -> Path:
    coeffs = np.asarray(coeffs)
    rows = zip(range(coeffs.size), coeffs.real, coeffs.imag, np.abs(coeffs) ** 2)
    return write_csv(path, ["n", "re_c", "im_c", "abs_c2"], rows)


def write_density(path, profile) -> Path:
    return write_csv(path, ["u", "rho"], zip(profile.u, profile.rho),
                     footer=[("t", float(profile.t)), ("norm", profile.norm)])


def write_pattern(path, pattern) -> Path:
    rows = [(p.u, p.amplitude, p.order) for p in pattern.peaks]
    return write_csv(path, ["u", "amplitude", "order"], rows,
                     footer=[("t", float(pattern.source_time)), ("spacing", pattern.spacing)])


def write_sweep(path, table) -> Path:
    return write_csv(path, table.columns, table.rows)


def write_manifest(path, config, files, timings) -> Path:
    """Config hash, tool version, file checksums and per-stage wall-clock times."""
    files = sorted(Path(f) for f in files)
    manifest = {
        "config_hash": config.config_hash(),
        "version": __version__,
        "files": {f.name: sha256_file(f) for f in files},
        "timings_s": dict(timings),
    }
    return write_json(path, manifest)


# ---------------------------------------------------------------- basis cache

def save_basis(path, basis: Basis) -> Path:
    path = Path(path)
    np.savez(path, E_prime=basis.E_prime, psi=basis.psi, parity=basis.parity.astype("U4"),
             nodes=basis.nodes, paired=basis.paired)
    return path


def load_basis(path, system: ScaledSystem) -> Basis:
    with np.load(Path(path)) as data:
        basis = Basis(system, data["E_prime"], data["psi"], data["parity"], data["nodes"],
                      data["paired"])
    if basis.psi.shape[1] != system.grid.size:
        raise ValueError(f"cached basis at {path} does not match the system grid")
    return basis
