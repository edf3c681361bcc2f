"""
Small exact tensor algebra used by the assembly, the post-processing and the diagnostics: symmetric and
symmetric trace-free projections, the trace-free 2D to 3D embedding, the third-order Stf projection, the kernels of
the symmetric (trace-free) gradient and explicit polynomial right inverses of the divergence on those kernels.
"""
from dataclasses import dataclass, field
from enum import Enum, auto
from functools import lru_cache
from itertools import permutations
from typing import List, NamedTuple, Optional, Tuple, Union

import numpy as np
import sympy as sy

from r13_mfem.exceptions import R13Exception

DEFAULT_SEED = 13


class SymTensor2(NamedTuple):
    """A symmetric 2x2 tensor stored as its three independent components"""
    s11: float
    s12: float
    s22: float

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.s11, self.s12], [self.s12, self.s22]])


def sym_project(m) -> np.ndarray:
    """Symmetric part (M + M^T)/2 over the last two axes"""
    m = np.asarray(m)
    return 0.5 * (m + np.swapaxes(m, -1, -2))


def stf_project(m, d: Optional[int] = None) -> np.ndarray:
    """
    Symmetric trace-free part sym(M) - tr(M)/d I over the last two axes.

    :param m: Array of shape (..., d, d), real or complex
    :param d: The dimension, inferred from the array when omitted
    :return: Array of the same shape
    """
    m = np.asarray(m)
    d = d or m.shape[-1]
    if d not in (2, 3) or m.shape[-1] != d or m.shape[-2] != d:
        raise R13Exception(f"stf_project needs square 2x2 or 3x3 input, got shape {m.shape} for d={d}")
    trace = np.trace(m, axis1=-2, axis2=-1)
    return sym_project(m) - trace[..., None, None] / d * np.eye(d)


def embed_2d(sigma) -> np.ndarray:
    """
    Embeds a symmetric 2D tensor as the 3x3 trace-free tensor [[s11, s12, 0], [s12, s22, 0], [0, 0, -(s11+s22)]].

    :param sigma: A SymTensor2, a (..., 2, 2) matrix array, or a (..., 3) array of (s11, s12, s22) components
    :return: Array of shape (..., 3, 3)
    """
    if isinstance(sigma, SymTensor2):
        components = np.array(sigma)
    else:
        sigma = np.asarray(sigma, dtype=float)
        if sigma.shape[-2:] == (2, 2):
            components = np.stack([sigma[..., 0, 0], 0.5 * (sigma[..., 0, 1] + sigma[..., 1, 0]),
                                   sigma[..., 1, 1]], axis=-1)
        elif sigma.shape[-1] == 3:
            components = sigma
        else:
            raise R13Exception(f"embed_2d cannot interpret an array of shape {sigma.shape}")
    out = np.zeros(components.shape[:-1] + (3, 3))
    out[..., 0, 0] = components[..., 0]
    out[..., 0, 1] = out[..., 1, 0] = components[..., 1]
    out[..., 1, 1] = components[..., 2]
    out[..., 2, 2] = -(components[..., 0] + components[..., 2])
    return out


def stf3_project(m) -> np.ndarray:
    """
    Symmetric trace-free part of third-order tensors over the last three axes:
    m_(ijk) - (v_i d_jk + v_j d_ik + v_k d_ij)/5 with v_i = m_(ill) the trace of the symmetrized tensor.
    """
    m = np.asarray(m, dtype=float)
    lead = m.ndim - 3
    axes = [lead, lead + 1, lead + 2]
    symmetric = sum(np.transpose(m, list(range(lead)) + list(p)) for p in permutations(axes)) / 6.0
    v = np.einsum('...ill->...i', symmetric)
    delta = np.eye(3)
    correction = np.einsum('...i,jk->...ijk', v, delta)
    correction = correction + np.einsum('...j,ik->...ijk', v, delta) + np.einsum('...k,ij->...ijk', v, delta)
    return symmetric - correction / 5.0


@lru_cache(maxsize=None)
def stf3_matrix() -> np.ndarray:
    """The 27x27 matrix of stf3_project acting on row-major flattened third-order tensors"""
    return stf3_project(np.eye(27).reshape(27, 3, 3, 3)).reshape(27, 27).T.copy()


def embedded_gradient(component_gradients) -> np.ndarray:
    """
    Third-order gradient of an embedded 2D tensor field, with zero out-of-plane derivatives.

    :param component_gradients: Array (..., 3, 2) with [c, k] the derivative of component c=(11, 12, 22) along x_k
    :return: Array (..., 3, 3, 3) with [i, j, k] the derivative of the embedded entry (i, j) along x_k
    """
    g = np.asarray(component_gradients, dtype=float)
    out = np.zeros(g.shape[:-2] + (3, 3, 3))
    for k in range(2):
        out[..., :, :, k] = embed_2d(g[..., :, k])
    return out


@lru_cache(maxsize=None)
def inplane_stf_gram() -> np.ndarray:
    """
    Gram matrix G (3, 2, 3, 2) with Stf(grad emb(sigma)) : Stf(grad emb(tau)) = sum G[c,k,e,l] dsig_c/dx_k dtau_e/dx_l,
    built from the 27x27 projection and the embedding of the six in-plane component derivatives.
    """
    embedding = np.zeros((27, 6))
    for c in range(3):
        for k in range(2):
            unit = np.zeros((3, 2))
            unit[c, k] = 1.0
            embedding[:, 2 * c + k] = embedded_gradient(unit).ravel()
    projected = stf3_matrix() @ embedding
    return (projected.T @ projected).reshape(3, 2, 3, 2)


def sym_grad(gradient) -> np.ndarray:
    """Symmetric gradient from (..., d, d) gradient arrays with [i, j] = dv_i/dx_j"""
    return sym_project(gradient)


def stf_grad(gradient) -> np.ndarray:
    """Symmetric trace-free gradient from (..., d, d) gradient arrays with [i, j] = dv_i/dx_j"""
    return stf_project(gradient)


def _coordinates(d: int) -> Tuple[sy.Symbol, ...]:
    return sy.symbols(' '.join(f"x{i + 1}" for i in range(d)), real=True)


def _evaluate_expressions(expressions, symbols, points: np.ndarray) -> np.ndarray:
    points = np.atleast_2d(np.asarray(points, dtype=float))
    columns = [points[:, i] for i in range(len(symbols))]
    values = []
    for expr in expressions:
        value = sy.lambdify(symbols, expr, 'numpy')(*columns)
        values.append(np.broadcast_to(np.asarray(value, dtype=float), (len(points),)))
    return np.stack(values, axis=-1)


class KernelType(Enum):
    """Members of the kernel of the symmetric gradient (2D) or symmetric trace-free gradient (3D)"""
    Translation = auto()
    Rotation = auto()
    Scaling = auto()
    SpecialConformal = auto()


class KernelField:
    """
    A single kernel member v(x) described by its tag and parameter payload:
    translation a (v = a), rotation with skew A (v = Ax), scaling lam (v = lam x), special conformal b
    (v = 2 (b.x) x - |x|^2 b).
    """

    def __init__(self, tag: KernelType, dimension: int, payload):
        if dimension not in (2, 3):
            raise R13Exception(f"Kernel fields exist for d=2 or d=3, got d={dimension}")
        self.tag = tag
        self.dimension = dimension
        if tag == KernelType.Scaling:
            self.payload = float(payload)
        else:
            self.payload = np.asarray(payload, dtype=float)
        if tag == KernelType.Rotation:
            if self.payload.shape != (dimension, dimension) or \
                    not np.allclose(self.payload, -self.payload.T, atol=1e-14):
                raise R13Exception("Rotation payload must be a skew-symmetric d x d matrix")
        elif tag in (KernelType.Translation, KernelType.SpecialConformal) and self.payload.shape != (dimension,):
            raise R13Exception(f"{tag.name} payload must be a vector of length {dimension}")

    def __repr__(self) -> str:
        return f"KernelField({self.tag.name}, d={self.dimension})"

    @property
    def symbols(self) -> Tuple[sy.Symbol, ...]:
        return _coordinates(self.dimension)

    def symbolic(self) -> sy.Matrix:
        x = sy.Matrix(self.symbols)
        if self.tag == KernelType.Translation:
            return sy.Matrix(self.payload.tolist())
        if self.tag == KernelType.Rotation:
            return sy.Matrix(self.payload.tolist()) * x
        if self.tag == KernelType.Scaling:
            return sy.Float(self.payload) * x
        b = sy.Matrix(self.payload.tolist())
        return 2 * (b.T * x)[0, 0] * x - (x.T * x)[0, 0] * b

    def evaluate(self, points) -> np.ndarray:
        return _evaluate_expressions(list(self.symbolic()), self.symbols, points)

    def strain(self, points) -> np.ndarray:
        """The symmetric gradient (2D) or symmetric trace-free gradient (3D) at the points, shape (n, d, d)"""
        v = self.symbolic()
        gradient = v.jacobian(sy.Matrix(self.symbols))
        values = _evaluate_expressions(list(gradient), self.symbols, points)
        values = values.reshape(-1, self.dimension, self.dimension)
        return sym_grad(values) if self.dimension == 2 else stf_grad(values)


def kernel_basis(d: int) -> List[KernelField]:
    """
    A spanning set of the kernel: rigid motions for d=2 (dimension 3), conformal Killing fields for d=3
    (dimension 10, ordered translations, rotations, scaling, special conformal).
    """
    if d not in (2, 3):
        raise R13Exception(f"Kernel basis is defined for d=2 or d=3, got d={d}")
    identity = np.eye(d)
    fields = [KernelField(KernelType.Translation, d, identity[i]) for i in range(d)]
    for i in range(d):
        for j in range(i + 1, d):
            skew = np.zeros((d, d))
            skew[i, j], skew[j, i] = 1.0, -1.0
            fields.append(KernelField(KernelType.Rotation, d, skew))
    if d == 3:
        fields.append(KernelField(KernelType.Scaling, d, 1.0))
        fields.extend(KernelField(KernelType.SpecialConformal, d, identity[i]) for i in range(d))
    return fields


@dataclass
class PolynomialTensorField:
    """A symmetric d x d tensor field with polynomial entries, differentiated exactly"""
    expression: sy.Matrix
    symbols: Tuple[sy.Symbol, ...]

    @property
    def dimension(self) -> int:
        return len(self.symbols)

    def evaluate(self, points) -> np.ndarray:
        d = self.dimension
        return _evaluate_expressions(list(self.expression), self.symbols, points).reshape(-1, d, d)

    def divergence_symbolic(self) -> sy.Matrix:
        d = self.dimension
        return sy.Matrix([
            sy.expand(sum(sy.diff(self.expression[i, j], self.symbols[j]) for j in range(d))) for i in range(d)
        ])

    def divergence(self, points) -> np.ndarray:
        return _evaluate_expressions(list(self.divergence_symbolic()), self.symbols, points)


def divergence_right_inverse(v: KernelField) -> PolynomialTensorField:
    """
    A polynomial symmetric tensor field sigma with div sigma = v exactly; trace-free when d=3.

    :param v: A 2D rigid motion or any of the four 3D kernel types
    :return: The tensor field, of degree at most 3
    """
    symbols = v.symbols
    x = sy.Matrix(symbols)
    d = v.dimension
    identity = sy.eye(d)
    r2 = (x.T * x)[0, 0]
    if d == 2:
        if v.tag == KernelType.Translation:
            b1, b2 = (sy.Float(c) for c in v.payload)
            expr = sy.Matrix([[b1 * symbols[0], 0], [0, b2 * symbols[1]]])
        elif v.tag == KernelType.Rotation:
            a = sy.Float(v.payload[0, 1])
            expr = a * symbols[0] * symbols[1] * sy.Matrix([[1, 0], [0, -1]])
        else:
            raise R13Exception(f"{v.tag.name} fields are not in the kernel of the 2D symmetric gradient")
    elif v.tag == KernelType.Translation:
        a = sy.Matrix(v.payload.tolist())
        expr = (3 * (a * x.T + x * a.T) - 2 * (a.T * x)[0, 0] * identity) / 10
    elif v.tag == KernelType.Rotation:
        ax = sy.Matrix(v.payload.tolist()) * x
        expr = (ax * x.T + x * ax.T) / 5
    elif v.tag == KernelType.Scaling:
        expr = 3 * sy.Float(v.payload) * (x * x.T - r2 * identity / 3) / 10
    else:
        b = sy.Matrix(v.payload.tolist())
        bx = (b.T * x)[0, 0]
        expr = (34 * bx * x * x.T - 11 * r2 * (b * x.T + x * b.T) - 4 * r2 * bx * identity) / 70
    return PolynomialTensorField(expr.applyfunc(sy.expand), symbols)


def symbol_min_singular_value(xi) -> Tuple[float, np.ndarray]:
    """
    Smallest singular value of the complex linear map v -> stf(v (x) xi) and a unit null direction, computed on
    the real representation of size 2d^2 x 2d whose singular values are those of the complex map, each twice.

    :param xi: Complex vector of length 2 or 3
    :return: Tuple of (smallest singular value, complex right singular vector for it)
    """
    xi = np.asarray(xi, dtype=complex)
    d = len(xi)
    columns = [stf_project(np.outer(np.eye(d)[j], xi), d).ravel() for j in range(d)]
    m = np.stack(columns, axis=1)
    real = np.block([[m.real, -m.imag], [m.imag, m.real]])
    _, singular_values, vh = np.linalg.svd(real)
    x = vh[-1]
    direction = x[:d] + 1j * x[d:]
    return float(singular_values[-1]), direction / np.linalg.norm(direction)


@dataclass
class SymbolReport:
    dimension: int
    min_singular_values: List[float]
    counterexample_found: bool
    counterexample_xi: Optional[np.ndarray] = None
    null_vector: Optional[np.ndarray] = None
    messages: List[str] = field(default_factory=list)


def symbol_injectivity_check(d: int, trials: int, seed: int = DEFAULT_SEED,
                             singular_tolerance: float = 1e-12) -> SymbolReport:
    """
    Samples random complex directions on the unit sphere of C^d and records the smallest singular value of the
    symbol of the trace-free symmetric gradient for each.  For d=2 the known isotropic direction (i, -1) is
    checked as well, which is where injectivity fails.

    :param d: Dimension, 2 or 3
    :param trials: Number of random directions, at least 1
    :param seed: Seed of the random generator
    :param singular_tolerance: Values below this count as singular
    :return: A SymbolReport
    """
    if d not in (2, 3):
        raise R13Exception(f"Symbol check is defined for d=2 or d=3, got d={d}")
    if trials < 1:
        raise R13Exception(f"Symbol check needs at least one trial, got {trials}")
    rng = np.random.default_rng(seed)
    values = []
    report = SymbolReport(d, values, False)
    for _ in range(trials):
        xi = rng.standard_normal(d) + 1j * rng.standard_normal(d)
        xi /= np.linalg.norm(xi)
        value, direction = symbol_min_singular_value(xi)
        values.append(value)
        if value < singular_tolerance and not report.counterexample_found:
            report.counterexample_found = True
            report.counterexample_xi = xi
            report.null_vector = direction
    if d == 2:
        xi = np.array([1j, -1.0])
        value, direction = symbol_min_singular_value(xi)
        if value < singular_tolerance:
            report.counterexample_found = True
            report.counterexample_xi = xi
            report.null_vector = direction
            report.messages.append(f"xi = (i, -1) is singular, smallest singular value {value:.3e}")
    report.messages.append(f"smallest singular value over {trials} random directions: {min(values):.6g}")
    return report


def as_components(matrix: Union[np.ndarray, SymTensor2]) -> np.ndarray:
    """Components (s11, s12, s22) of a symmetric (..., 2, 2) array"""
    if isinstance(matrix, SymTensor2):
        return np.array(matrix)
    matrix = np.asarray(matrix)
    return np.stack([matrix[..., 0, 0], matrix[..., 0, 1], matrix[..., 1, 1]], axis=-1)
