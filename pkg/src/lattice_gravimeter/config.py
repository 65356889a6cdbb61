import logging
import os
from importlib import metadata

from flask import Config as SettingsStore

ENVVAR_CONFIG = "LATTICE_GRAVIMETER_CONFIG"


class Config(object):
    """This is the basic configuration class for the lattice gravimeter tools."""

    # This will be populated after load from the package metadata, any value specified here will be overwritten.
    VERSION = ""

    ###################################################################################################
    # General settings
    ###################################################################################################
    LOG_FILE = None  # Leave to None to log in stderr
    LOG_LEVEL = logging.INFO

    # Seed for randomized validation draws when --seed is not given
    DEFAULT_SEED = 42

    ###################################################################################################
    # State settings
    ###################################################################################################

    # Largest particle number accepted for a symmetric (Dicke) state, bounds memory
    STATE_CAP = 10**6

    # Largest deviation of sum |c_n|^2 from 1 accepted by the moment formulas
    NORM_TOLERANCE = 1e-9

    ###################################################################################################
    # Fock-space oracle settings
    ###################################################################################################

    # Largest particle number simulated in the 10-mode Fock space, dimension C(N+9, 9)
    ORACLE_CAP = 8

    # Analytic-vs-oracle agreement required by the validate command
    VALIDATION_TOLERANCE = 1e-10

    # Random (state, xi, phi) draws per particle number in the validate command
    VALIDATION_DRAWS = 50

    ###################################################################################################
    # Squeezing optimizer settings
    ###################################################################################################

    # mu grid: geometric points resolve the small twists optimal at large N, linear points cover (0, pi/2]
    OAT_LOG_GRID_POINTS = 256
    OAT_LINEAR_GRID_POINTS = 512
    OAT_MU_FLOOR = 1e-7

    # Above this particle number the optimizer scores twists with the closed-form Kitagawa-Ueda moments
    OAT_CLOSED_FORM_ABOVE = 1000

    ###################################################################################################
    # Output settings
    ###################################################################################################

    # 17 significant digits round-trip every double
    CSV_FLOAT_FORMAT = "%.17g"

    # Default number of phase points of a fringe scan
    FRINGE_POINTS = 201

    # Readout-phase grid used to locate fringe peaks in the robustness scan
    PEAK_GRID_POINTS = 10**4


def load_settings(config_class: str = "lattice_gravimeter.config.Config", config_env: str = ENVVAR_CONFIG):
    """Load the default settings, overridden by the python file named in the environment variable if set."""
    settings = SettingsStore(os.getcwd())
    settings.from_object(config_class)
    if config_env and os.environ.get(config_env):
        settings.from_envvar(config_env)
    try:
        settings["VERSION"] = metadata.version("lattice_gravimeter")
    except metadata.PackageNotFoundError:
        settings["VERSION"] = "unknown"
    return settings
