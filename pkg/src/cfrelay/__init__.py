"""
Compress-and-forward rates for the MIMO Gaussian relay channel with
interference-correlated noise

Importing the package sets up the application directory, the settings
file location and the package logger. The logger writes WARNING and up
to the console and INFO and up to a rotating file in LOGDIR.

"""

import logging
from logging.handlers import RotatingFileHandler
import os
from importlib.metadata import PackageNotFoundError, version

NAME = 'cfRelay'

HOMEDIR = os.path.expanduser('~')
OUTDIR = os.path.join(HOMEDIR, 'cfrelay-results')

# CFRELAY_HOME overrides the settings and log location
APPDIR = os.environ.get(
    'CFRELAY_HOME',
    os.path.join(HOMEDIR, '.config', __name__),
)
LOGDIR = os.path.join(APPDIR, 'logs')

os.makedirs(LOGDIR, exist_ok=True)

SETTINGS_FILE = os.path.join(APPDIR, 'settings.json')

LOG = logging.getLogger(__name__)
LOG.setLevel(logging.DEBUG)

STREAM = logging.StreamHandler()
STREAM.setLevel(logging.WARNING)
STREAM.setFormatter(
    logging.Formatter(
        '%(asctime)s [%(levelname).4s] %(message)s'
    )
)

ROTFILE = RotatingFileHandler(
    os.path.join(LOGDIR, f"{__name__}.log"),
    maxBytes=500*2**10,
    backupCount=5,
)
ROTFILE.setLevel(logging.INFO)
ROTFILE.setFormatter(
    logging.Formatter(
        '%(asctime)s [%(levelname).4s] {%(name)s.%(funcName)s} %(message)s'
    )
)

LOG.addHandler(STREAM)
LOG.addHandler(ROTFILE)

try:
    __version__ = version(__name__)
except PackageNotFoundError:
    __version__ = '0.0.0'
