import csv
import json
import os
from fractions import Fraction

import numpy as np

from source.configuration import logging

REPORT_FIELDS = ["quantity", "y", "estimate", "stderr", "trials", "seed", "c", "N", "pass"]


def _json_default(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, np.integer):
        return int(value)
    if isinstance(value, np.floating):
        return float(value)
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, np.ndarray):
        return value.tolist()
    return str(value)


class ReportHandler:
    """
    Writes region and check reports to the output directory.
    Files carry no timestamp or host information: the same run gives byte-identical files.
    """

    def __init__(self, output_config):
        self.config = output_config
        self.directory = self._resolve_output_directory()
        self._ensure_output_directory()

    def _resolve_output_directory(self):
        output_dir = self.config.directory
        if os.path.isabs(output_dir):
            return output_dir
        return os.path.abspath(output_dir)

    def _ensure_output_directory(self):
        try:
            os.makedirs(self.directory, exist_ok=True)
            logging.debug(f"Output directory: {self.directory}")
        except OSError as e:
            logging.error(f"Failed to create output directory '{self.directory}': {e}")
            raise

    def path(self, filename):
        return os.path.join(self.directory, filename)

    def save_json(self, filename, payload):
        json_file = self.path(filename)
        with open(json_file, 'w', encoding='utf-8') as f:
            json.dump(payload, f, indent=2, ensure_ascii=False, default=_json_default)
            f.write("\n")
        logging.info(f"Report saved: {json_file}")
        return json_file

    def save_csv(self, filename, rows):
        csv_file = self.path(filename)
        with open(csv_file, 'w', newline='', encoding='utf-8') as f:
            writer = csv.DictWriter(f, fieldnames=REPORT_FIELDS, lineterminator="\n", extrasaction="ignore")
            writer.writeheader()
            for row in rows:
                writer.writerow({key: "" if row.get(key) is None else row.get(key) for key in REPORT_FIELDS})
        logging.info(f"Table saved: {csv_file}")
        return csv_file

    def save_report(self, payload, rows, basename="report"):
        """Write <basename>.json and <basename>.csv according to output.formats. Returns the written paths."""
        written = []
        if "json" in self.config.formats:
            written.append(self.save_json(f"{basename}.json", payload))
        if "csv" in self.config.formats:
            written.append(self.save_csv(f"{basename}.csv", rows))
        return written
