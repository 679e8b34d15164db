"""Physical constants and unit conversions (Hartree atomic units internally)."""

HARTREE_EV = 27.211386
AU_TIME_FS = 0.02418884
FS_AU = 41.34137

SPEED_OF_LIGHT = 137.036
EPSILON0 = 1.0 / (4.0 * 3.141592653589793)
MU0 = 4.0 * 3.141592653589793 / SPEED_OF_LIGHT**2

ELECTRON_MASS = 1.0
PROTON_MASS = 1836.15267


def ev_to_au(energy_ev):
    return energy_ev / HARTREE_EV


def au_to_ev(energy_au):
    return energy_au * HARTREE_EV


def fs_to_au(time_fs):
    return time_fs * FS_AU


def au_to_fs(time_au):
    return time_au * AU_TIME_FS
