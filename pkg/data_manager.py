"""
File persistence for channels, Pauli channels, circuits and reports
"""

import csv
import io
import json
import logging
import os
from typing import Any, Dict, List, Optional, Sequence

import numpy as np

from channels import KrausChannel, pauli_channel
from clifford_rep import Circuit
from config import NORMALIZATION_TOLERANCE
from errors import ValidationError
from pauli_algebra import PauliLabel
from twirl_engine import PauliDistribution
from utils import round_floats

logger = logging.getLogger(__name__)

PAULI_CHANNEL_SUFFIXES = (".pauli", ".txt")


def render_json(record: Dict[str, Any]) -> str:
    """Stable JSON text: sorted keys, rounded floats, trailing newline"""
    return json.dumps(round_floats(record), indent=2, sort_keys=True) + "\n"


def render_csv(rows: Sequence[Dict[str, Any]], fieldnames: Optional[List[str]] = None) -> str:
    if not rows:
        return ""
    fieldnames = fieldnames or list(rows[0].keys())
    buffer = io.StringIO()
    writer = csv.DictWriter(buffer, fieldnames=fieldnames, lineterminator="\n")
    writer.writeheader()
    for row in rows:
        writer.writerow({key: "" if value is None else value for key, value in round_floats(row).items()})
    return buffer.getvalue()


class DataManager:
    def __init__(self, output_dir: str = "results"):
        self.output_dir = output_dir

    def resolve(self, path: str) -> str:
        """Relative output paths land in the output directory"""
        if os.path.isabs(path) or os.path.dirname(path):
            return path
        return os.path.join(self.output_dir, path)

    def write_text(self, text: str, path: str) -> str:
        """Write text, creating parent directories; returns the final path"""
        target = self.resolve(path)
        parent = os.path.dirname(target)
        if parent:
            os.makedirs(parent, exist_ok=True)
        with open(target, "w", encoding="utf-8") as f:
            f.write(text)
        logger.info(f"Wrote {target}")
        return target

    def save_record(self, record: Dict[str, Any], path: str) -> str:
        return self.write_text(render_json(record), path)

    def write_csv(self, rows: Sequence[Dict[str, Any]], path: str) -> str:
        return self.write_text(render_csv(rows), path)

    # --- Kraus channels ---

    def load_channel(self, path: str) -> KrausChannel:
        """Load a Kraus channel (.json) or a sparse Pauli channel (.pauli / .txt)"""
        if path.endswith(PAULI_CHANNEL_SUFFIXES):
            distribution = self.load_pauli_channel(path)
            return pauli_channel(distribution.n, distribution.weights, name=_channel_id(path))

        with open(path, "r", encoding="utf-8") as f:
            data = json.load(f)
        try:
            operators = tuple(_decode_matrix(matrix) for matrix in data["kraus"])
        except (KeyError, TypeError, ValueError) as e:
            raise ValidationError(f"Malformed channel file {path}: {e}")
        declared_n = data.get("n")
        channel = KrausChannel(
            operators,
            trace_preserving=bool(data.get("trace_preserving", True)),
            name=data.get("name", _channel_id(path)),
        )
        if declared_n is not None and declared_n != channel.n:
            raise ValidationError(f"Channel file {path} declares n = {declared_n} but operators act on {channel.n} qubits")
        logger.info(f"Loaded channel {channel.name} ({len(operators)} Kraus operators on {channel.n} qubits) from {path}")
        return channel

    def save_channel(self, channel: KrausChannel, path: str) -> str:
        data = {
            "name": channel.name,
            "n": channel.n,
            "trace_preserving": channel.trace_preserving,
            "kraus": [_encode_matrix(op) for op in channel.operators],
        }
        return self.write_text(json.dumps(data, indent=2) + "\n", path)

    # --- sparse Pauli channels ---

    def load_pauli_channel(self, path: str) -> PauliDistribution:
        """Lines of '<label> <weight>'; '#' starts a comment"""
        entries: Dict[str, float] = {}
        with open(path, "r", encoding="utf-8") as f:
            for number, raw in enumerate(f, 1):
                line = raw.split("#", 1)[0].strip()
                if not line:
                    continue
                parts = line.split()
                if len(parts) != 2:
                    raise ValidationError(f"{path}:{number}: expected '<label> <weight>', got {raw.strip()!r}")
                label = str(PauliLabel.from_string(parts[0]))
                if label in entries:
                    raise ValidationError(f"{path}:{number}: duplicate label {label}")
                try:
                    entries[label] = float(parts[1])
                except ValueError:
                    raise ValidationError(f"{path}:{number}: weight {parts[1]!r} is not a number")

        distribution = PauliDistribution.from_sparse(entries)
        distribution.validate(NORMALIZATION_TOLERANCE)
        logger.info(f"Loaded Pauli channel with {len(entries)} labels on {distribution.n} qubits from {path}")
        return distribution

    def save_pauli_channel(self, distribution: PauliDistribution, path: str, threshold: float = 0.0) -> str:
        lines = [f"{label} {weight!r}" for label, weight in sorted(distribution.to_sparse(threshold).items())]
        return self.write_text("\n".join(lines) + "\n", path)

    # --- circuits ---

    def save_circuit(self, circuit: Circuit, path: str) -> str:
        return self.write_text(circuit.to_text(), path)

    def load_circuit(self, path: str) -> Circuit:
        with open(path, "r", encoding="utf-8") as f:
            return Circuit.from_text(f.read())


def _channel_id(path: str) -> str:
    return os.path.splitext(os.path.basename(path))[0]


def _encode_matrix(matrix: np.ndarray) -> List[List[List[float]]]:
    return [[[float(entry.real), float(entry.imag)] for entry in row] for row in matrix]


def _decode_matrix(rows) -> np.ndarray:
    """Entries are [re, im] pairs or plain reals"""
    def entry(value) -> complex:
        if isinstance(value, (list, tuple)):
            real, imag = value
            return complex(float(real), float(imag))
        return complex(float(value))

    return np.array([[entry(value) for value in row] for row in rows], dtype=complex)
