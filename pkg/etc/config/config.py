# Example tool settings, loaded when LATTICE_GRAVIMETER_CONFIG=/path/to/this/file.
# Defaults are in src/lattice_gravimeter/config.py, only the keys set here are overridden.
import logging

###################################################################################################
# General settings
###################################################################################################
LOG_FILE = None  # Leave to None to log in stderr
LOG_LEVEL = logging.DEBUG

###################################################################################################
# Fock-space oracle settings
###################################################################################################

# Random (state, xi, phi) draws of the validate command
VALIDATION_DRAWS = 20

###################################################################################################
# Output settings
###################################################################################################

# Readout-phase grid of the robustness scan
PEAK_GRID_POINTS = 4096
