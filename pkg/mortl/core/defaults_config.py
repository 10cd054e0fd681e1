"""Load the numerical defaults from a YAML file."""

import os
from typing import Any, Dict

import yaml


def load_defaults() -> Dict[str, Dict[str, Any]]:
    """Read the numerical defaults shipped next to this module.

    The tolerances live under the top-level key `defaults` of
    `defaults.yml`, one section per algorithm.

    Returns
    -------
    Dict[str, Dict[str, Any]]
        A dictionary where keys are section names (optimizer, tsia,
        verify, sweep) and values are the default settings of
        each section.

    Raises
    ------
    FileNotFoundError
        If `defaults.yml` is missing from the package.

    """
    base_dir = os.path.dirname(os.path.abspath(__file__))
    file_path = os.path.join(base_dir, "defaults.yml")

    if not os.path.exists(file_path):
        raise FileNotFoundError(
            f"The file 'defaults.yml' was not found at {file_path}"
        )

    with open(file_path, "r") as file:
        data = yaml.safe_load(file)
        return data["defaults"]


DEFAULTS = load_defaults()
