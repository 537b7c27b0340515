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
# Exception hierarchy shared by the whole package.
#
# ===============================================================================================


__all__ = [
    'NestedVAEError',
    'DimensionError',
    'DomainError',
    'NumericError',
    'UsageError',
    'FormatError',
    'DataError',
    'PairingError',
    'TrainingError',
    'ConfigError',
]


class NestedVAEError(Exception):
    """Base class of every error raised by :mod:`nestedvae`."""


class DimensionError(NestedVAEError, ValueError):
    """Operand shapes do not agree."""


class DomainError(NestedVAEError, ValueError):
    """Input outside the mathematical domain of an operation (e.g. log of a negative number)."""


class NumericError(NestedVAEError, ArithmeticError):
    """A NaN or Inf appeared where only finite values are allowed."""


class UsageError(NestedVAEError, ValueError):
    """An API was called with arguments outside its contract."""


class FormatError(NestedVAEError, ValueError):
    """A file on disk does not follow the expected binary or JSON layout."""


class DataError(NestedVAEError, ValueError):
    """A dataset or batch violates its contract."""


class PairingError(DataError):
    """Pairs cannot be formed, e.g. a class is present in a single domain only."""


class TrainingError(NumericError):
    """Training produced a non-finite loss.

    :param epoch: epoch index at which the failure happened.
    :param batch: batch index inside the epoch.
    """

    def __init__(self, message, epoch=None, batch=None):
        super().__init__(message)
        self.epoch = epoch
        self.batch = batch


class ConfigError(NestedVAEError, ValueError):
    """Invalid or unknown configuration value."""
