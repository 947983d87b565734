"""Readers for the solver's CSV artifact schemas."""

from __future__ import annotations

import csv

SWEEP_HEADER = ["eps", "sup_l2_diff", "sup_h1_diff", "grad_diss_integral",
                "wall_time_s", "status"]
FIT_HEADER = ["norm", "slope", "intercept", "residual"]
DIAG_HEADER_HEAD = ["t", "E", "D"]


class MalformedCsvError(ValueError):
    pass


def read_sweep(path) -> list[dict]:
    rows = []
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != SWEEP_HEADER:
            raise MalformedCsvError(
                f"{path}: expected sweep header {SWEEP_HEADER}, "
                f"got {reader.fieldnames}"
            )
        for rec in reader:
            try:
                rows.append({
                    "eps": float(rec["eps"]),
                    "sup_l2_diff": float(rec["sup_l2_diff"]),
                    "sup_h1_diff": float(rec["sup_h1_diff"]),
                    "status": rec["status"],
                })
            except (TypeError, ValueError) as err:
                raise MalformedCsvError(f"{path}: bad row {rec}") from err
    return rows


def read_fit(path) -> dict[str, dict]:
    fits = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != FIT_HEADER:
            raise MalformedCsvError(
                f"{path}: expected fit header {FIT_HEADER}, "
                f"got {reader.fieldnames}"
            )
        for rec in reader:
            try:
                fits[rec["norm"]] = {
                    "slope": float(rec["slope"]),
                    "intercept": float(rec["intercept"]),
                    "residual": float(rec["residual"]),
                }
            except (TypeError, ValueError) as err:
                raise MalformedCsvError(f"{path}: bad row {rec}") from err
    if not fits:
        raise MalformedCsvError(f"{path}: no fit rows")
    return fits


def read_diagnostics(path) -> dict[str, list[float]]:
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise MalformedCsvError(f"{path}: empty file") from None
        if header[:3] != DIAG_HEADER_HEAD:
            raise MalformedCsvError(
                f"{path}: expected diagnostics columns starting with "
                f"{DIAG_HEADER_HEAD}, got {header[:3]}"
            )
        cols = {name: [] for name in header}
        for line in reader:
            if len(line) != len(header):
                raise MalformedCsvError(f"{path}: ragged row {line}")
            for name, val in zip(header, line):
                try:
                    cols[name].append(float(val))
                except ValueError as err:
                    raise MalformedCsvError(
                        f"{path}: non-numeric value {val!r}") from err
    if not cols["t"]:
        raise MalformedCsvError(f"{path}: no data rows")
    return cols
