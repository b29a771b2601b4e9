"""Unit system: Å, eV, fs, masses in g/mol."""

from scipy import constants

KB = 8.617333262e-5  # eV/K

# 1 (g/mol)·Å²/fs² expressed in eV
MVV_TO_EV = constants.atomic_mass * 1e10 / constants.eV

# eV/Å³ -> bar
EV_PER_A3_TO_BAR = constants.eV * 1e30 / constants.bar

MASSES = {
    "H": 1.008,
    "O": 15.999,
    "Cu": 63.546,
}
