"""dB/linear conversions.

Core modules work in linear units throughout; conversions are confined to
the user-facing layers (CLI, result tables).
"""

import numpy as np


def db_to_linear(value_db):
    return 10.0 ** (np.asarray(value_db, dtype=float) / 10.0)


def linear_to_db(value):
    return 10.0 * np.log10(value)
