"""Special functions, dense complex solves and seeded random numbers.

Everything here is a thin, validated layer over numpy/scipy so the rest of
the package can rely on a fixed contract (domain checks, explicit failure
on singular systems, reproducible random streams).
"""

from __future__ import annotations

import math
import warnings

import numpy as np
import scipy.linalg
import scipy.special

EULER_GAMMA = 0.5772156649015329


class SingularMatrixError(np.linalg.LinAlgError):
    """Raised when a system matrix is singular to working precision."""


def hankel1(order, z):
    """Hankel function of the first kind, H_n^(1)(z) = J_n(z) + i Y_n(z).

    Parameters
    ----------
    order : {0, 1}
        Bessel order.
    z : complex or array_like of complex
        Argument. Must be nonzero with ``Im(z) >= 0`` (outgoing branch).

    Returns
    -------
    complex or ndarray of complex
    """
    if order not in (0, 1):
        raise ValueError(f"only orders 0 and 1 are supported, got {order!r}")
    z_arr = np.asarray(z)
    if np.any(z_arr == 0):
        raise ValueError("hankel1 is singular at z = 0")
    if np.iscomplexobj(z_arr):
        if np.any(z_arr.imag < 0):
            raise ValueError("hankel1 requires Im(z) >= 0")
        if np.all(z_arr.imag == 0):
            out = _hankel1_real(order, z_arr.real)
        else:
            out = scipy.special.hankel1(order, z_arr)
    else:
        out = _hankel1_real(order, z_arr.astype(float))
    return out[()] if out.ndim == 0 else out


def _hankel1_real(order, x):
    # Cephes J/Y are several times faster than the Amos complex path.
    if np.any(x < 0):
        return scipy.special.hankel1(order, x.astype(complex))
    if order == 0:
        return scipy.special.j0(x) + 1j * scipy.special.y0(x)
    return scipy.special.j1(x) + 1j * scipy.special.y1(x)


def hankel1_pair(z):
    """Return ``(H_0^(1)(z), H_1^(1)(z))`` for an array of valid arguments."""
    return hankel1(0, z), hankel1(1, z)


class LUFactorization:
    """LU factors with partial pivoting, reusable for several right-hand sides."""

    def __init__(self, A):
        A = np.asarray(A)
        if A.ndim != 2 or A.shape[0] != A.shape[1]:
            raise ValueError(f"A must be square, got shape {A.shape}")
        if not np.all(np.isfinite(A)):
            raise ValueError("non-finite entries in system matrix")
        self.n = A.shape[0]
        with warnings.catch_warnings():
            # exact-zero pivots are reported below as SingularMatrixError
            warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
            self.lu, self.piv = scipy.linalg.lu_factor(A, check_finite=False)
        pivots = np.abs(np.diag(self.lu))
        scale = np.max(np.abs(A)) if A.size else 0.0
        if scale == 0.0 or pivots.min() <= self.n * np.finfo(float).eps * scale:
            raise SingularMatrixError("matrix is singular to working precision")

    def solve(self, b):
        b = np.asarray(b)
        if b.shape[0] != self.n:
            raise ValueError(f"dimension mismatch: system is {self.n}, rhs is {b.shape}")
        if not np.all(np.isfinite(b)):
            raise ValueError("non-finite entries in right-hand side")
        return scipy.linalg.lu_solve((self.lu, self.piv), b, check_finite=False)


def lu_solve(A, b):
    """Solve ``A x = b`` by LU factorization with partial pivoting.

    Raises
    ------
    SingularMatrixError
        If ``A`` is singular to working precision.
    """
    A = np.asarray(A)
    b = np.asarray(b)
    if A.ndim == 2 and b.shape[0] != A.shape[0]:
        raise ValueError(f"dimension mismatch: A is {A.shape}, b is {b.shape}")
    return LUFactorization(A).solve(b)


def regularized_normal_solve(C, rhs, tau):
    """Solve the Tikhonov normal equations ``(C^H C + tau I) d = C^H rhs``.

    The system matrix is Hermitian positive definite for ``tau > 0`` and is
    factored by Cholesky.
    """
    if not tau > 0:
        raise ValueError(f"tau must be positive, got {tau}")
    C = np.asarray(C)
    rhs = np.asarray(rhs)
    if C.ndim != 2 or rhs.shape != (C.shape[0],):
        raise ValueError(f"shape mismatch: C {C.shape}, rhs {rhs.shape}")
    CH = C.conj().T
    A = CH @ C
    A[np.diag_indices_from(A)] += tau
    return scipy.linalg.cho_solve(scipy.linalg.cho_factor(A), CH @ rhs)


class SeededRng:
    """Deterministic random stream keyed by a 64-bit seed.

    Uniforms come from a PCG64 generator; normals are produced by
    Box-Muller on consecutive uniform pairs so the transform is fixed
    independently of numpy's own normal sampler.
    """

    def __init__(self, seed: int):
        seed = int(seed)
        if not 0 <= seed < 2**64:
            raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
        self.seed = seed
        self._gen = np.random.Generator(np.random.PCG64(seed))

    def uniform(self, size=None):
        """Uniform samples in [0, 1)."""
        return self._gen.random(size)

    def gaussian(self, size=None):
        """Standard normal samples (Box-Muller)."""
        n = 1 if size is None else int(np.prod(size))
        m = (n + 1) // 2
        u1 = 1.0 - self._gen.random(m)  # (0, 1], keeps log finite
        u2 = self._gen.random(m)
        rad = np.sqrt(-2.0 * np.log(u1))
        z = np.empty(2 * m)
        z[0::2] = rad * np.cos(2 * math.pi * u2)
        z[1::2] = rad * np.sin(2 * math.pi * u2)
        if size is None:
            return float(z[0])
        return z[:n].reshape(size)

    def spawn(self, key: int) -> "SeededRng":
        """Child stream derived from ``(seed, key)``; independent of draw order."""
        ss = np.random.SeedSequence([self.seed & 0xFFFFFFFF, self.seed >> 32, int(key)])
        return SeededRng(int(ss.generate_state(1, dtype=np.uint64)[0]))


def rng_uniform(rng: SeededRng, size=None):
    return rng.uniform(size)


def rng_gaussian(rng: SeededRng, size=None):
    return rng.gaussian(size)
