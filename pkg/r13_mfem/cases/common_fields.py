from math import pi, sqrt

import numpy as np


class CommonFields:
    """
    This class is just a collection of static analytic fields.  Several of the diagnostics and tests use the same
    smooth fields on the unit square, and there is no need to redefine them in each.  Every function takes points
    of shape (n, 2) and returns values of shape (n, components).
    """

    @staticmethod
    def polynomial_bubble_tensor(points: np.ndarray) -> np.ndarray:
        """
        Evaluates tau = x(1-x) y(1-y) e1 (x) e1 as stored components (t11, t12, t22); vanishes on the unit square
        boundary.
        """
        x, y = points[:, 0], points[:, 1]
        values = np.zeros((len(points), 3))
        values[:, 0] = x * (1.0 - x) * y * (1.0 - y)
        return values

    @staticmethod
    def polynomial_bubble_tensor_gradient(points: np.ndarray) -> np.ndarray:
        x, y = points[:, 0], points[:, 1]
        gradients = np.zeros((len(points), 3, 2))
        gradients[:, 0, 0] = (1.0 - 2.0 * x) * y * (1.0 - y)
        gradients[:, 0, 1] = x * (1.0 - x) * (1.0 - 2.0 * y)
        return gradients

    @staticmethod
    def sine_bubble_tensor(points: np.ndarray) -> np.ndarray:
        """Evaluates tau = sin(pi x) sin(pi y) e1 (x) e1; vanishes on the unit square boundary"""
        values = np.zeros((len(points), 3))
        values[:, 0] = np.sin(pi * points[:, 0]) * np.sin(pi * points[:, 1])
        return values

    @staticmethod
    def sine_bubble_tensor_gradient(points: np.ndarray) -> np.ndarray:
        gradients = np.zeros((len(points), 3, 2))
        x, y = pi * points[:, 0], pi * points[:, 1]
        gradients[:, 0, 0] = pi * np.cos(x) * np.sin(y)
        gradients[:, 0, 1] = pi * np.sin(x) * np.cos(y)
        return gradients

    @staticmethod
    def sine_bubble_tensor_seminorm() -> float:
        """The H1 seminorm of sine_bubble_tensor on the unit square, pi / sqrt(2)"""
        return pi / sqrt(2.0)

    @staticmethod
    def translation_x(points: np.ndarray) -> np.ndarray:
        return np.tile([1.0, 0.0], (len(points), 1))

    @staticmethod
    def translation_y(points: np.ndarray) -> np.ndarray:
        return np.tile([0.0, 1.0], (len(points), 1))

    @staticmethod
    def rotation(points: np.ndarray) -> np.ndarray:
        """Evaluates the infinitesimal rotation (x2, -x1)"""
        return np.stack([points[:, 1], -points[:, 0]], axis=1)

    @staticmethod
    def rigid_motions():
        return [CommonFields.translation_x, CommonFields.translation_y, CommonFields.rotation]

    @staticmethod
    def linear_x(points: np.ndarray) -> np.ndarray:
        return points[:, :1].copy()

    @staticmethod
    def sine_x(points: np.ndarray) -> np.ndarray:
        return np.sin(pi * points[:, :1])
