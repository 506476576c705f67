"""
Configuration management for the unitary design toolkit
"""

import os
import logging

logger = logging.getLogger(__name__)

# Tolerance hierarchy
EXACT_TOLERANCE = 1e-10
UNITARITY_TOLERANCE = 1e-8
CPTP_TOLERANCE = 1e-10
NORMALIZATION_TOLERANCE = 1e-9
DESIGN_CHECK_TOLERANCE = 1e-10

# Capacity guards (qubits)
DENSE_MAX_QUBITS = 12
BRUTE_FORCE_MAX_QUBITS = 3
ENUMERATION_MAX_QUBITS = 2
CHAIN_MAX_QUBITS = 8
PROTOCOL_MAX_QUBITS = 10

DEFAULT_OUTPUT_DIR = "results"
DEFAULT_LOG_FILE = "design_toolkit.log"


class Config:
    def __init__(self):
        self.output_dir = os.getenv("DESIGN_OUTPUT_DIR", DEFAULT_OUTPUT_DIR)
        self.log_file = os.getenv("DESIGN_LOG_FILE", DEFAULT_LOG_FILE)
        self.log_level = os.getenv("DESIGN_LOG_LEVEL", "INFO").upper()
        self.workers = self._get_workers()

        self.exact_tolerance = EXACT_TOLERANCE
        self.unitarity_tolerance = UNITARITY_TOLERANCE
        self.cptp_tolerance = CPTP_TOLERANCE
        self.normalization_tolerance = NORMALIZATION_TOLERANCE
        self.design_check_tolerance = DESIGN_CHECK_TOLERANCE

        self.dense_max_qubits = DENSE_MAX_QUBITS
        self.brute_force_max_qubits = BRUTE_FORCE_MAX_QUBITS
        self.enumeration_max_qubits = ENUMERATION_MAX_QUBITS
        self.chain_max_qubits = CHAIN_MAX_QUBITS
        self.protocol_max_qubits = PROTOCOL_MAX_QUBITS

    def _get_workers(self):
        """Get the batch worker count from the environment"""
        raw = os.getenv("DESIGN_WORKERS", "1")
        try:
            return int(raw)
        except ValueError:
            raise ValueError("DESIGN_WORKERS must be a valid integer")

    def validate_config(self):
        """Validate all configuration parameters"""
        errors = []

        if not self.output_dir:
            errors.append("Output directory is missing")

        if self.workers <= 0:
            errors.append("Worker count must be positive")

        if self.log_level not in logging.getLevelNamesMapping():
            errors.append(f"Unknown log level {self.log_level}")

        tolerances = {
            "exact": self.exact_tolerance,
            "unitarity": self.unitarity_tolerance,
            "cptp": self.cptp_tolerance,
            "normalization": self.normalization_tolerance,
            "design check": self.design_check_tolerance,
        }
        for name, value in tolerances.items():
            if not 0 < value < 1:
                errors.append(f"{name.capitalize()} tolerance must lie in (0, 1)")

        if errors:
            raise ValueError(f"Configuration errors: {', '.join(errors)}")

        logger.info("Configuration validated successfully")
        return True
