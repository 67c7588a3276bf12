import json
import os
import threading
import time
from typing import Any, Dict, Iterable, List, Optional, Union

import numpy as np
import pandas as pd
import psutil

# 12 significant digits for every float written to an output file
FLOAT_FORMAT = "%.12g"


def read_json_as_dict(input_path: str) -> Dict:
    """
    Reads a JSON file and returns its content as a dictionary.

    Args:
        input_path (str): The path to the JSON file.

    Returns:
        dict: The content of the JSON file as a dictionary.

    Raises:
        FileNotFoundError: If input_path does not point to a file.
        ValueError: If the file does not hold a JSON object.
    """
    if not os.path.isfile(input_path):
        raise FileNotFoundError(f"Config file does not exist: {input_path}")

    with open(input_path, "r", encoding="utf-8") as file:
        json_data_as_dict = json.load(file)

    if not isinstance(json_data_as_dict, dict):
        raise ValueError(f"Expected a JSON object in {input_path}")
    return json_data_as_dict


def format_provenance(provenance: Optional[Dict[str, Any]]) -> List[str]:
    """
    Renders a flat mapping as `# key=value` comment lines, sorted by key.

    Args:
        provenance (dict, optional): The resolved configuration.

    Returns:
        List[str]: One comment line per key (without trailing newline).
    """
    if not provenance:
        return []
    lines = []
    for key in sorted(provenance):
        value = provenance[key]
        if isinstance(value, (list, tuple)):
            value = ",".join(str(v) for v in value)
        lines.append(f"# {key}={value}")
    return lines


def save_dataframe_as_csv(
    dataframe: pd.DataFrame,
    file_path: str,
    provenance: Optional[Dict[str, Any]] = None,
) -> None:
    """
    Saves a pandas dataframe to a CSV file.

    The file starts with `# key=value` provenance lines, then a header row.
    Float values are written with 12 significant digits and LF line endings.

    Args:
    - dataframe (pd.DataFrame): The pandas dataframe to be saved.
    - file_path (str): File path and name to save the CSV file.
    - provenance (dict, optional): Resolved configuration to record.

    Raises:
    - IOError: If an error occurs while saving the CSV file.
    """
    try:
        with open(file_path, "w", encoding="utf-8", newline="\n") as file:
            for line in format_provenance(provenance):
                file.write(line + "\n")
            dataframe.to_csv(
                file, index=False, float_format=FLOAT_FORMAT, lineterminator="\n"
            )
    except IOError as exc:
        raise IOError(f"Error saving CSV file: {exc}") from exc


def read_csv_with_provenance(file_path: str) -> pd.DataFrame:
    """Reads a CSV written by save_dataframe_as_csv, skipping comment lines."""
    return pd.read_csv(file_path, comment="#")


def save_text_lines(
    lines: Iterable[str],
    file_path: str,
    provenance: Optional[Dict[str, Any]] = None,
) -> None:
    """
    Saves `key=value` summary lines to a text file below the provenance header.

    Args:
    - lines (Iterable[str]): The lines to write.
    - file_path (str): File path and name of the text file.
    - provenance (dict, optional): Resolved configuration to record.
    """
    with open(file_path, "w", encoding="utf-8", newline="\n") as file:
        for line in format_provenance(provenance):
            file.write(line + "\n")
        for line in lines:
            file.write(line + "\n")


def format_float(value: float) -> str:
    """Formats a float the same way the CSV writer does."""
    return FLOAT_FORMAT % value


def save_json(file_path_and_name: str, data: Any) -> None:
    """Save json to a path (directory + filename)"""
    with open(file_path_and_name, "w", encoding="utf-8") as file:
        json.dump(
            data,
            file,
            default=lambda o: make_serializable(o),
            sort_keys=True,
            indent=4,
            separators=(",", ": "),
        )


def make_serializable(obj: Any) -> Union[int, float, List[Union[int, float]], Any]:
    """
    Converts a given object into a serializable format.

    Args:
    - obj: Any Python object

    Returns:
    - If obj is an integer or numpy integer, returns the integer value as an int
    - If obj is a numpy floating-point number, returns the floating-point value
        as a float
    - If obj is a numpy array, returns the array as a list
    - Otherwise, uses the default behavior of the json.JSONEncoder to serialize obj
    """
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    elif isinstance(obj, np.floating):
        return float(obj)
    elif isinstance(obj, np.bool_):
        return bool(obj)
    elif isinstance(obj, np.ndarray):
        return obj.tolist()
    else:
        return json.JSONEncoder.default(None, obj)


class MemoryMonitor:
    """Samples the resident memory of the current process on a background thread."""

    def __init__(self, interval=20.0, logger=None):
        self.interval = interval
        self.logger = logger
        self.running = False
        self.initial_memory = None
        self.peak_memory = 0
        self.thread = threading.Thread(target=self.monitor_loop, daemon=True)

    def monitor_memory(self):
        process = psutil.Process(os.getpid())
        total_memory = process.memory_info().rss

        self.peak_memory = max(self.peak_memory, total_memory)
        if self.initial_memory is None:
            self.initial_memory = total_memory

    def monitor_loop(self):
        """Runs the monitoring process in a loop."""
        while self.running:
            self.monitor_memory()
            time.sleep(self.interval)

    def start(self):
        """Starts the memory monitoring."""
        if not self.running:
            self.monitor_memory()
            self.running = True
            self.thread.start()

    def stop(self):
        """Stops the periodic monitoring"""
        self.running = False
        self.monitor_memory()
        if self.logger is not None:
            self.logger.info(
                "CPU Memory allocated (peak): "
                f"{(self.peak_memory - self.initial_memory) / (1024**2):.2f} MB"
            )


class ResourceTracker(object):
    """
    This class serves as a context manager to track time and
    memory allocated by code executed inside it.
    """

    def __init__(self, logger, monitoring_interval):
        self.logger = logger
        self.monitor = MemoryMonitor(logger=logger, interval=monitoring_interval)

    def __enter__(self):
        self.start_time = time.time()
        self.monitor.start()
        return self

    def __exit__(self, exc_type, exc_value, traceback):
        self.end_time = time.time()
        self.monitor.stop()
        elapsed_time = self.end_time - self.start_time
        self.logger.info(f"Execution time: {elapsed_time:.2f} seconds")
