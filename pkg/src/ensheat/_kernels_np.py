"""Pure-numpy fallback for the assembly scatter kernels.

``np.ufunc.at`` applies updates unbuffered and in index order, so results
match the compiled kernels' sequential loops.
"""

import numpy as np


def scatter_add(data, pos, vals):
    """data[pos[k]] += vals[k] over flat index/value arrays."""
    np.add.at(data, pos, vals)


def scatter_add_rows(out, idx, vals):
    """out[idx[e, i]] += vals[e, i] for all elements e and local slots i."""
    np.add.at(out, idx.ravel(), vals.ravel())
