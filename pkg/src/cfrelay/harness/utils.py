import logging
import os
import json

from .. import OUTDIR, SETTINGS_FILE
from ..errors import ConfigError

DEFAULTS = {
    'outdir': OUTDIR,
    'parallel': 1,
}


def load_settings() -> dict:
    """
    Load dict from data JSON file

    Missing keys are filled from the defaults.

    Returns:
        dict: Settings data loaded from JSON file

    Raises:
        ConfigError: Unreadable JSON or a bad parallel value

    """

    if not os.path.isfile(SETTINGS_FILE):
        settings = dict(DEFAULTS)
        save_settings(settings)
        return settings

    logging.getLogger(__name__).debug(
        'Loading settings from %s', SETTINGS_FILE,
    )
    with open(SETTINGS_FILE, 'r') as fid:
        try:
            settings = {**DEFAULTS, **json.load(fid)}
        except json.JSONDecodeError as err:
            raise ConfigError(f"Corrupt settings file {SETTINGS_FILE}: {err}")
    parallel = settings['parallel']
    if not (isinstance(parallel, int) and parallel >= 1):
        raise ConfigError(f"parallel must be a positive int, got {parallel!r}")
    return settings


def save_settings(settings: dict) -> None:
    """
    Save dict to JSON file

    Arguments:
        settings (dict): Settings to save to JSON file

    """

    logging.getLogger(__name__).debug(
        'Saving settings to %s', SETTINGS_FILE,
    )
    with open(SETTINGS_FILE, 'w') as fid:
        json.dump(settings, fid)


def output_path(settings: dict, out: str, name: str) -> str:
    """
    Resolve the CSV destination of a subcommand

    Arguments:
        settings (dict): Loaded settings
        out (str): Path given on the command line, may be None
        name (str): Default file name inside the output directory

    Returns:
        str

    """

    if out is None:
        out = os.path.join(settings['outdir'], name)
    outdir = os.path.dirname(os.path.abspath(out))
    os.makedirs(outdir, exist_ok=True)
    return out
