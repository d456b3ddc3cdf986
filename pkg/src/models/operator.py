from abc import ABC, abstractmethod
from functools import cached_property

import numpy as np

from src.models.raster import BinsLike, RasterLike, as_bins, as_image


class LinearOperator(ABC):
    """Contract for a nonnegative linear forward model A and its adjoint Aᵀ.

    `image_shape` is the (height, width) of the unknown raster.
    `output_shape` is the natural 2-D grid of the measurement bins (image
    rows × columns for convolution, angles × detector bins for projection);
    the flat measurement vector is its row-major flattening. Subsets for
    ordered-subsets EM are strided rows of this grid.
    """

    def __init__(self, image_shape: tuple[int, int], output_shape: tuple[int, int]):
        self.image_shape = (int(image_shape[0]), int(image_shape[1]))
        self.output_shape = (int(output_shape[0]), int(output_shape[1]))

    @property
    def output_length(self) -> int:
        return self.output_shape[0] * self.output_shape[1]

    @abstractmethod
    def _forward(self, x: np.ndarray) -> np.ndarray:
        """(height, width) -> flat bins."""

    @abstractmethod
    def _backward(self, v: np.ndarray) -> np.ndarray:
        """flat bins -> (height, width)."""

    def apply(self, x: RasterLike) -> np.ndarray:
        return self._forward(as_image(x, self.image_shape))

    def adjoint(self, v: BinsLike) -> np.ndarray:
        return self._backward(as_bins(v, self.output_length))

    @cached_property
    def backprojected_ones(self) -> np.ndarray:
        s = self._backward(np.ones(self.output_length))
        s.setflags(write=False)
        return s

    def restrict_rows(self, index: int, count: int) -> "LinearOperator":
        """Sub-operator keeping output rows index, index+count, …"""
        return RowSubsetOperator(self, index, count)

    def describe(self) -> dict:
        return {"type": type(self).__name__, "image_shape": list(self.image_shape)}


class RowSubsetOperator(LinearOperator):
    def __init__(self, parent: LinearOperator, index: int, count: int):
        rows = len(range(index, parent.output_shape[0], count))
        super().__init__(parent.image_shape, (rows, parent.output_shape[1]))
        self.parent = parent
        self.index = index
        self.count = count

    def _forward(self, x):
        full = self.parent._forward(x).reshape(self.parent.output_shape)
        return full[self.index :: self.count].ravel()

    def _backward(self, v):
        full = np.zeros(self.parent.output_shape)
        full[self.index :: self.count] = v.reshape(self.output_shape)
        return self.parent._backward(full.ravel())

    def describe(self) -> dict:
        return {**self.parent.describe(), "subset": [self.index, self.count]}
