# Copyright (c) 2024 NestedVAE developers
#
# MIT License
#
# Permission is hereby granted, free of charge, to any person obtaining a copy
# of this software and associated documentation files (the "Software"), to deal
# in the Software without restriction, including without limitation the rights
# to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
# copies of the Software, and to permit persons to whom the Software is
# furnished to do so, subject to the following conditions:
#
# The above copyright notice and this permission notice shall be included in all
# copies or substantial portions of the Software.
#
# THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
# IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
# FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
# AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER
# LIABILITY, WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM,
# OUT OF OR IN CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE
# SOFTWARE.
#
# Scatter plots of the 2-D projection written by the evaluate command.
#
# ===============================================================================================


import logging

import numpy as np

__all__ = [
    'read_projection',
    'plot_projection',
]

logger = logging.getLogger(__name__)


def read_projection(path: str) -> np.ndarray:
    """Load ``projection.csv`` as a structured array with fields ``x, y, class, domain``."""
    # config comment, then the column header
    return np.genfromtxt(path, delimiter=',', skip_header=2,
                         dtype=[('x', 'f8'), ('y', 'f8'), ('class', 'i8'), ('domain', 'i8')])


def plot_projection(csv_path: str, png_path: str, title: str = '') -> None:
    """
    Two side-by-side scatters of the projection, coloured by class and by domain.

    :param csv_path: a ``projection.csv`` file.
    :param png_path: output image path.
    """
    import matplotlib
    matplotlib.use('Agg')
    import matplotlib.pyplot as plt

    data = np.atleast_1d(read_projection(csv_path))
    fig, axes = plt.subplots(1, 2, figsize=(12, 5))
    for ax, field in zip(axes, ('class', 'domain')):
        points = ax.scatter(data['x'], data['y'], c=data[field], cmap='tab10', s=6)
        ax.set_title('{} by {}'.format(title or 'embedding', field))
        ax.set_xlabel('PC 1')
        ax.set_ylabel('PC 2')
        fig.colorbar(points, ax=ax, label=field)
    plt.tight_layout()
    plt.savefig(png_path, dpi=150, bbox_inches='tight')
    plt.close(fig)
    logger.info('wrote %s', png_path)
