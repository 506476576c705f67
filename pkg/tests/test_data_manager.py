import json
import os

import numpy as np
import pytest

from channels import amplitude_damping_channel, dephasing_channel
from clifford_rep import Circuit, Gate
from data_manager import DataManager, render_csv, render_json
from dense_oracle import exact_average_fidelity
from errors import ValidationError
from pauli_algebra import PauliLabel
from twirl_engine import PauliDistribution


@pytest.fixture
def manager(tmp_path):
    return DataManager(str(tmp_path / "results"))


class TestRendering:
    def test_json_is_sorted_and_rounded(self):
        text = render_json({"b": 0.1 + 0.2, "a": [np.float64(2.0)]})
        assert text == '{\n  "a": [\n    2.0\n  ],\n  "b": 0.3\n}\n'

    def test_csv(self):
        text = render_csv([{"n": 2, "tvd": None}, {"n": 3, "tvd": 0.5}])
        assert text == "n,tvd\n2,\n3,0.5\n"
        assert render_csv([]) == ""


class TestChannelFiles:
    def test_bundled_kraus_channel(self, manager, data_dir):
        channel = manager.load_channel(os.path.join(data_dir, "dephasing_half.json"))
        assert channel.n == 1
        assert exact_average_fidelity(channel) == pytest.approx(2 / 3)

    def test_bundled_pauli_channels(self, manager, data_dir):
        channel = manager.load_channel(os.path.join(data_dir, "dephasing_half.pauli"))
        assert channel.name == "dephasing_half"
        assert exact_average_fidelity(channel) == pytest.approx(2 / 3)
        depolarizing = manager.load_pauli_channel(os.path.join(data_dir, "two_qubit_depolarizing.pauli"))
        assert depolarizing.identity_weight == pytest.approx(0.8125)

    def test_kraus_round_trip(self, manager):
        channel = amplitude_damping_channel(0.3)
        path = manager.save_channel(channel, "damping.json")
        assert path == os.path.join(manager.output_dir, "damping.json")
        loaded = manager.load_channel(path)
        assert loaded.name == channel.name
        for a, b in zip(loaded.operators, channel.operators):
            np.testing.assert_allclose(a, b)

    def test_real_entries_are_accepted(self, tmp_path, manager):
        path = tmp_path / "flip.json"
        path.write_text(json.dumps({"kraus": [[[0, 1], [1, 0]]]}))
        channel = manager.load_channel(str(path))
        assert channel.name == "flip"
        assert exact_average_fidelity(channel) == pytest.approx(1 / 3)

    def test_declared_qubits_must_match(self, tmp_path, manager):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"n": 2, "kraus": [[[1, 0], [0, 1]]]}))
        with pytest.raises(ValidationError, match="declares n = 2"):
            manager.load_channel(str(path))

    def test_malformed(self, tmp_path, manager):
        path = tmp_path / "bad.json"
        path.write_text(json.dumps({"operators": []}))
        with pytest.raises(ValidationError, match="Malformed"):
            manager.load_channel(str(path))

    def test_not_trace_preserving(self, tmp_path, manager):
        path = tmp_path / "leak.json"
        path.write_text(json.dumps({"kraus": [[[0.5, 0], [0, 0.5]]]}))
        with pytest.raises(ValidationError):
            manager.load_channel(str(path))

    def test_missing_file(self, manager):
        with pytest.raises(OSError):
            manager.load_channel("does/not/exist.json")


class TestPauliChannelFiles:
    def test_round_trip(self, manager):
        distribution = PauliDistribution.from_sparse({"XY": 0.25, "II": 0.75})
        loaded = manager.load_pauli_channel(manager.save_pauli_channel(distribution, "mix.pauli"))
        np.testing.assert_array_equal(loaded.weights, distribution.weights)

    @pytest.mark.parametrize("content, message", [
        ("I 0.5 extra\n", "expected"),
        ("I half\n", "not a number"),
        ("I 0.5\nI 0.5\n", "duplicate"),
    ])
    def test_malformed_lines(self, tmp_path, manager, content, message):
        path = tmp_path / "bad.pauli"
        path.write_text(content)
        with pytest.raises(ValidationError, match=message):
            manager.load_pauli_channel(str(path))

    def test_weights_must_sum_to_one(self, tmp_path, manager):
        path = tmp_path / "short.pauli"
        path.write_text("I 0.5\nX 0.4\n")
        with pytest.raises(ValidationError):
            manager.load_pauli_channel(str(path))


class TestOutputs:
    def test_circuit_round_trip(self, manager):
        circuit = Circuit(2, (Gate.h(1), Gate.cnot(2, 1), Gate.s(1)), PauliLabel.from_string("XZ"))
        loaded = manager.load_circuit(manager.save_circuit(circuit, "circuit.txt"))
        assert loaded == circuit

    def test_explicit_paths_are_kept(self, tmp_path, manager):
        target = tmp_path / "nested" / "report.json"
        assert manager.save_record({"x": 1}, str(target)) == str(target)
        assert json.loads(target.read_text()) == {"x": 1}

    def test_csv_output(self, manager):
        path = manager.write_csv([{"repetition": 1, "tvd": 0.5}], "rows.csv")
        with open(path) as f:
            assert f.read() == "repetition,tvd\n1,0.5\n"

    def test_dephasing_helper_matches_bundled_file(self, manager, data_dir):
        bundled = manager.load_channel(os.path.join(data_dir, "dephasing_half.json"))
        for a, b in zip(bundled.operators, dephasing_channel(0.5).operators):
            np.testing.assert_allclose(a, b)
