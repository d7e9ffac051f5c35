"""Dense complex linear algebra for small Hopf-manifold data.

Spectra and diagonalizability of the contraction ``A``, its principal
logarithm (block Schur-Parlett), Lyapunov solves, Hermitian positivity and
the threshold ``u0`` past which ``h1 + u*h2`` becomes positive definite.
"""
from dataclasses import dataclass
from typing import Optional

import numpy as np
import scipy.linalg as sla
from scipy.linalg.lapack import ztrexc

from .errors import (BranchAmbiguity, DegenerateW, IllConditioned,
                     NotContraction, Singular)
from .tolerances import DEFAULT, EPS, ToleranceProfile

# eigenvalues closer than this (relative) share a Schur-Parlett block
CLUSTER_DELTA = 0.1
_LOG_SERIES_MAX = 600


def _frozen(a):
    a = np.array(a, dtype=complex)
    a.setflags(write=False)
    return a


def as_square(A) -> np.ndarray:
    A = np.asarray(A, dtype=complex)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.isfinite(A)):
        raise ValueError("matrix has non-finite entries")
    return A


@dataclass(frozen=True)
class Contraction:
    """A linear contraction ``A`` with its eigendata.

    ``Q`` and ``A_abs`` (same eigenbasis, eigenvalues ``|alpha_i|``) are only
    set when ``A`` is numerically diagonalizable.
    """

    A: np.ndarray
    eigenvalues: np.ndarray
    diagonalizable: bool
    Q: Optional[np.ndarray] = None
    A_abs: Optional[np.ndarray] = None
    eigvec_cond: float = np.inf

    @property
    def n(self) -> int:
        return self.A.shape[0]

    def summary(self):
        return {
            "n": self.n,
            "eigenvalues": [[float(a.real), float(a.imag)] for a in self.eigenvalues],
            "diagonalizable": bool(self.diagonalizable),
            "eigvec_cond": float(self.eigvec_cond),
        }


@dataclass(frozen=True)
class FlowGenerator:
    """``L = log A``; the flow is ``sigma(t) = exp(t L)`` and ``sigma(q) = A``."""

    L: np.ndarray
    A: np.ndarray
    q: float = 1.0

    @property
    def n(self) -> int:
        return self.L.shape[0]

    def flow(self, t) -> np.ndarray:
        return sla.expm(t * self.L)


@dataclass(frozen=True)
class HermitianForm:
    H: np.ndarray

    @classmethod
    def from_matrix(cls, H, tol=DEFAULT.tol_sym, enforce=True):
        H = np.asarray(H, dtype=complex)
        asym = np.linalg.norm(H - H.conj().T)
        if asym > tol * max(1.0, np.linalg.norm(H)):
            raise ValueError(f"matrix is not Hermitian (||H - H*|| = {asym:.3e})")
        if enforce:
            H = 0.5 * (H + H.conj().T)
        return cls(_frozen(H))

    def __call__(self, x, y):
        """``h(x, y) = y* H x``, linear in the first slot."""
        return np.vdot(y, self.H @ x)

    def min_eig(self) -> float:
        return min_eig_hermitian(self)


@dataclass(frozen=True)
class LemmaLinearInstance:
    n: int
    W: np.ndarray
    h1: HermitianForm
    h2: HermitianForm
    y: np.ndarray
    y_prime: np.ndarray
    u0: float

    def h_u(self, u) -> np.ndarray:
        return self.h1.H + u * self.h2.H


def spectral_check(A, tol: ToleranceProfile = DEFAULT) -> Contraction:
    """Eigendata of ``A`` after checking it is an invertible strict contraction.

    ``A`` counts as diagonalizable when the column-normalized eigenvector
    matrix has 2-norm condition number at most ``tol.diag_cond``.
    """
    A = as_square(A)
    w, V = np.linalg.eig(A)
    scale = max(np.abs(w).max(), 1.0)
    if np.any(np.abs(w) <= 1e3 * EPS * scale):
        raise Singular(f"A has a zero eigenvalue: {w}")
    if np.any(np.abs(w) >= 1.0):
        raise NotContraction(f"eigenvalue moduli {np.abs(w)} not all < 1")
    V = V / np.linalg.norm(V, axis=0)
    cond = float(np.linalg.cond(V))
    diag = np.isfinite(cond) and cond <= tol.diag_cond
    if not diag:
        return Contraction(_frozen(A), _frozen(w), False, eigvec_cond=cond)
    Vinv = np.linalg.inv(V)
    recon = V @ np.diag(w) @ Vinv
    if np.linalg.norm(recon - A) > tol.tol_reconstruct * max(1.0, np.linalg.norm(A)):
        return Contraction(_frozen(A), _frozen(w), False, eigvec_cond=cond)
    A_abs = V @ np.diag(np.abs(w)) @ Vinv
    return Contraction(_frozen(A), _frozen(w), True, _frozen(V), _frozen(A_abs), cond)


def _clusters(d):
    """Label eigenvalues so that close ones share a label (transitive closure)."""
    n = len(d)
    parent = list(range(n))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i in range(n):
        for j in range(i + 1, n):
            di, dj = d[i], d[j]
            # never merge across the branch cut
            if min(di.real, dj.real) < 0 and np.sign(di.imag) * np.sign(dj.imag) < 0:
                continue
            if abs(di - dj) <= CLUSTER_DELTA * max(abs(di), abs(dj)):
                parent[find(i)] = find(j)
    roots, labels = {}, []
    for i in range(n):
        labels.append(roots.setdefault(find(i), len(roots)))
    return labels


def _reorder(T, Z, labels):
    """Swap the Schur form so equal labels sit in contiguous diagonal blocks."""
    labels = list(labels)
    order = sorted(range(len(labels)), key=lambda i: (labels[i], i))
    want = [labels[i] for i in order]
    for p in range(len(labels)):
        if labels[p] == want[p]:
            continue
        j = next(k for k in range(p + 1, len(labels)) if labels[k] == want[p])
        T, Z, info = ztrexc(T, Z, j + 1, p + 1)
        if info != 0:
            raise np.linalg.LinAlgError(f"ztrexc failed with info={info}")
        labels.insert(p, labels.pop(j))
    return T, Z, labels


def _log_block(Tb):
    """Principal log of an upper-triangular block with clustered spectrum."""
    m = Tb.shape[0]
    sigma = np.mean(np.diag(Tb))
    if m == 1:
        return np.array([[np.log(Tb[0, 0])]])
    N = Tb / sigma - np.eye(m)
    term = np.eye(m, dtype=complex)
    acc = np.zeros((m, m), dtype=complex)
    small = 0
    for k in range(1, _LOG_SERIES_MAX):
        term = term @ N
        inc = ((-1) ** (k + 1) / k) * term
        acc += inc
        if np.linalg.norm(inc) <= EPS * max(np.linalg.norm(acc), 1.0):
            small += 1
            if small >= 2:
                break
        else:
            small = 0
    else:
        raise np.linalg.LinAlgError("log series did not converge on a diagonal block")
    return np.log(sigma) * np.eye(m) + acc


def logm_schur_parlett(A, branch_cut=DEFAULT.branch_cut) -> np.ndarray:
    """Principal matrix logarithm by block Schur-Parlett.

    The cut runs along ``arg = pi``; an eigenvalue within ``branch_cut`` of the
    negative real axis raises :class:`BranchAmbiguity`.
    """
    A = as_square(A)
    T, Z = sla.schur(A, output="complex")
    d = np.diag(T)
    on_cut = (d.real < 0) & (np.abs(d.imag) <= branch_cut)
    if np.any(on_cut):
        raise BranchAmbiguity(f"eigenvalues {d[on_cut]} lie on the branch cut arg = pi")
    labels = _clusters(d)
    T, Z, labels = _reorder(np.asarray(T, order="F"), np.asarray(Z, order="F"), labels)
    bounds = [0]
    for k in range(1, len(labels)):
        if labels[k] != labels[k - 1]:
            bounds.append(k)
    bounds.append(len(labels))
    blocks = [slice(bounds[k], bounds[k + 1]) for k in range(len(bounds) - 1)]
    F = np.zeros_like(T)
    for b in blocks:
        F[b, b] = _log_block(T[b, b])
    nb = len(blocks)
    for j in range(1, nb):
        bj = blocks[j]
        for i in range(j - 1, -1, -1):
            bi = blocks[i]
            rhs = F[bi, bi] @ T[bi, bj] - T[bi, bj] @ F[bj, bj]
            for k in range(i + 1, j):
                bk = blocks[k]
                rhs += F[bi, bk] @ T[bk, bj] - T[bi, bk] @ F[bk, bj]
            F[bi, bj] = sla.solve_sylvester(T[bi, bi], -T[bj, bj], rhs)
    return Z @ F @ Z.conj().T


def principal_log(C: Contraction, tol: ToleranceProfile = DEFAULT) -> FlowGenerator:
    L = logm_schur_parlett(C.A, tol.branch_cut)
    err = np.linalg.norm(sla.expm(L) - C.A)
    if err > tol.tol_exp * max(1.0, np.linalg.norm(C.A)):
        raise np.linalg.LinAlgError(f"exp(log A) misses A by {err:.3e}")
    return FlowGenerator(_frozen(L), C.A)


def solve_lyapunov(L, tol: ToleranceProfile = DEFAULT) -> HermitianForm:
    """Solve ``L* P + P L = -I`` by dense vectorization.

    Raises :class:`IllConditioned` when the ``n^2 x n^2`` system's condition
    number exceeds ``tol.lyap_cond``.
    """
    if isinstance(L, FlowGenerator):
        L = L.L
    L = as_square(L)
    if np.any(np.linalg.eigvals(L).real >= 0):
        raise ValueError("Lyapunov solve needs a stable L (spectrum in Re < 0)")
    n = L.shape[0]
    I = np.eye(n)
    # column-major vec: vec(L* P) = (I kron L*) vec P, vec(P L) = (L^T kron I) vec P
    K = np.kron(I, L.conj().T) + np.kron(L.T, I)
    cond = np.linalg.cond(K)
    if not np.isfinite(cond) or cond > tol.lyap_cond:
        raise IllConditioned(f"vectorized Lyapunov system has condition {cond:.3e}")
    p = np.linalg.solve(K, -I.reshape(-1, order="F").astype(complex))
    P = p.reshape((n, n), order="F")
    return HermitianForm(_frozen(0.5 * (P + P.conj().T)))


def lyapunov_residual(L, P) -> float:
    L = L.L if isinstance(L, FlowGenerator) else np.asarray(L)
    P = P.H if isinstance(P, HermitianForm) else np.asarray(P)
    return float(np.linalg.norm(L.conj().T @ P + P @ L + np.eye(L.shape[0]), 2))


def min_eig_hermitian(H) -> float:
    H = H.H if isinstance(H, HermitianForm) else np.asarray(H)
    return float(np.linalg.eigvalsh(0.5 * (H + H.conj().T))[0])


def lemma_linear_u0(h1, h2, W, tol: ToleranceProfile = DEFAULT) -> LemmaLinearInstance:
    """Threshold past which ``h1 + u*h2`` is positive definite.

    ``W`` is an ``n x (n-1)`` basis of the hyperplane on which ``h1`` is
    positive and ``h2`` vanishes.  With ``y`` normalized by ``h2(y, y) = 1``
    and ``y'`` the ``h1``-representer on ``W`` of ``z -> h1(z, y)``, the
    threshold is ``u0 = h1(y', y') - h1(y, y)``, which is sharp.
    """
    h1 = h1 if isinstance(h1, HermitianForm) else HermitianForm.from_matrix(h1, tol.tol_sym)
    h2 = h2 if isinstance(h2, HermitianForm) else HermitianForm.from_matrix(h2, tol.tol_sym)
    H1, H2 = h1.H, h2.H
    n = H1.shape[0]
    W = np.asarray(W, dtype=complex).reshape(n, -1)
    if W.shape[1] != n - 1:
        raise ValueError("W must span a codimension-1 subspace")
    Qfull, _ = np.linalg.qr(W, mode="complete")
    B = Qfull[:, : n - 1]
    G = B.conj().T @ H1 @ B
    if min_eig_hermitian(G) <= tol.tol_sym * max(1.0, np.linalg.norm(H1)):
        raise DegenerateW("h1 is not positive definite on W")
    h2W = B.conj().T @ H2 @ B
    if np.linalg.norm(h2W) > 1e3 * tol.tol_sym * max(1.0, np.linalg.norm(H2)):
        raise ValueError("h2 does not vanish on W")
    y0 = Qfull[:, n - 1]
    q = float(np.real(np.vdot(y0, H2 @ y0)))
    if q <= 0:
        raise ValueError("h2 is not positive on V/W")
    y = y0 / np.sqrt(q)
    c = np.linalg.solve(G, B.conj().T @ H1 @ y)
    y_prime = B @ c
    u0 = float(np.real(h1(y_prime, y_prime) - h1(y, y)))
    return LemmaLinearInstance(n, _frozen(B), h1, h2, _frozen(y), _frozen(y_prime), u0)


def absolute_part_unitarity(C: Contraction) -> float:
    """``||U* U - I||`` for ``U = A_abs A^-1``."""
    if not C.diagonalizable:
        raise ValueError("A_abs is only defined for diagonalizable A")
    U = C.A_abs @ np.linalg.inv(C.A)
    return float(np.linalg.norm(U.conj().T @ U - np.eye(C.n)))
