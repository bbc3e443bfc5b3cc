"""Reduced density matrices, logarithmic negativity, and simulated tomography.

Pair entanglement is certified by the logarithmic negativity
LN2 = log2 of the trace norm of the partially transposed two-qubit
density matrix; triplets use the geometric mean of the three one-vs-two
bipartition values. Simulated tomography reproduces the shot-limited
estimation chain: Pauli-basis measurements, linear inversion, and
projection onto the physical (unit-trace, positive) set.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from ionstring.dynamics import qubit_count

_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}

# Columns are eigenvectors of X, Y, Z ordered (+1, -1).
_BASIS_ROTATIONS = {
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
    "Y": np.array([[1, 1], [1j, -1j]], dtype=complex) / np.sqrt(2),
    "Z": np.eye(2, dtype=complex),
}

DEFAULT_SUBSET_CAP = 3


def reduced_density_matrix(
    state: np.ndarray,
    subset: tuple[int, ...],
    max_subset: int = DEFAULT_SUBSET_CAP,
) -> np.ndarray:
    """Partial trace of a pure state down to the given ions.

    ``subset`` uses 1-based ion indices in the order the qubits should
    appear in the reduced matrix. Subsets are capped at three qubits by
    default, matching what the certification pipeline consumes.
    """
    n = qubit_count(state)
    subset = tuple(int(i) for i in subset)
    if len(set(subset)) != len(subset):
        raise ValueError("duplicate ion indices in subset")
    if not all(1 <= i <= n for i in subset):
        raise ValueError(f"subset indices must lie in 1..{n}")
    if len(subset) > max_subset:
        raise ValueError(
            f"subset of {len(subset)} qubits exceeds cap {max_subset}"
        )

    axes_keep = [i - 1 for i in subset]
    axes_trace = [a for a in range(n) if a not in axes_keep]
    psi = state.reshape((2,) * n)
    rho = np.tensordot(psi, psi.conj(), axes=(axes_trace, axes_trace))
    # tensordot orders the kept axes by position; permute to subset order
    order = np.argsort(np.argsort(axes_keep))
    k = len(subset)
    rho = rho.transpose(*order, *(order + k))
    return rho.reshape(2**k, 2**k)


def partial_transpose(rho: np.ndarray, dims: tuple[int, int], which: int = 0) -> np.ndarray:
    """Partial transpose of a bipartite density matrix.

    ``dims = (dA, dB)`` factor the Hilbert space, ``which`` selects the
    transposed factor. The operation is an involution.
    """
    da, db = dims
    if rho.shape != (da * db, da * db):
        raise ValueError("dims do not match matrix size")
    r = rho.reshape(da, db, da, db)
    if which == 0:
        r = r.transpose(2, 1, 0, 3)
    elif which == 1:
        r = r.transpose(0, 3, 2, 1)
    else:
        raise ValueError("which must be 0 or 1")
    return r.reshape(da * db, da * db)


def _check_hermitian(rho: np.ndarray, tol: float = 1e-8):
    if np.max(np.abs(rho - rho.conj().T)) > tol:
        raise ValueError("density matrix is not Hermitian within tolerance")


@dataclass(frozen=True)
class LogNegativity:
    """Clipped value plus the raw (unclipped) log2 trace norm."""

    value: float
    raw: float

    def __float__(self) -> float:
        return self.value


def _bipartite_log_negativity(rho: np.ndarray, dims: tuple[int, int], which: int) -> LogNegativity:
    _check_hermitian(rho)
    pt = partial_transpose(rho, dims, which)
    trace_norm = float(np.sum(np.abs(np.linalg.eigvalsh(pt))))
    raw = float(np.log2(trace_norm))
    return LogNegativity(value=max(raw, 0.0), raw=raw)


def log_negativity_2(rho: np.ndarray, cut: int = 0) -> LogNegativity:
    """Logarithmic negativity of a two-qubit state across one qubit.

    ``cut`` selects which qubit is transposed; both choices give the
    same trace norm. The raw value is reported alongside the
    clipped-at-zero one so that tiny negative round-off is visible.
    """
    if rho.shape != (4, 4):
        raise ValueError("log_negativity_2 expects a 4x4 density matrix")
    return _bipartite_log_negativity(rho, (2, 2), cut)


def log_negativity_3(rho: np.ndarray) -> LogNegativity:
    """Geometric mean of the three one-vs-two bipartition negativities."""
    if rho.shape != (8, 8):
        raise ValueError("log_negativity_3 expects an 8x8 density matrix")
    values = []
    for i in range(3):
        order = [i] + [q for q in range(3) if q != i]
        perm = _permute_qubits(rho, order)
        values.append(_bipartite_log_negativity(perm, (2, 4), 0).value)
    value = float(np.cbrt(values[0] * values[1] * values[2]))
    return LogNegativity(value=value, raw=value)


def _permute_qubits(rho: np.ndarray, order: list[int]) -> np.ndarray:
    k = len(order)
    r = rho.reshape((2,) * (2 * k))
    axes = list(order) + [k + q for q in order]
    return r.transpose(axes).reshape(2**k, 2**k)


def project_to_physical(rho: np.ndarray) -> np.ndarray:
    """Nearest (Frobenius) unit-trace positive-semidefinite matrix.

    Projects the eigenvalue vector of the Hermitian part onto the
    probability simplex and rebuilds the matrix in the same eigenbasis.
    """
    herm = 0.5 * (rho + rho.conj().T)
    eigenvalues, vectors = np.linalg.eigh(herm)
    lam = _project_simplex(eigenvalues)
    return (vectors * lam[None, :]) @ vectors.conj().T


def _project_simplex(v: np.ndarray) -> np.ndarray:
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    rho_idx = np.nonzero(u - css / np.arange(1, len(v) + 1) > 0)[0][-1]
    theta = css[rho_idx] / (rho_idx + 1.0)
    return np.maximum(v - theta, 0.0)


@dataclass(frozen=True)
class TomographyRecord:
    """Counts from one Pauli measurement setting."""

    setting: tuple[str, ...]
    counts: np.ndarray
    shots: int
    seed: int | None = None


def _measurement_probabilities(rho: np.ndarray, setting: tuple[str, ...]) -> np.ndarray:
    u = _BASIS_ROTATIONS[setting[0]]
    for letter in setting[1:]:
        u = np.kron(u, _BASIS_ROTATIONS[letter])
    probs = np.real(np.einsum("ji,jk,ki->i", u.conj(), rho, u))
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def simulate_tomography(
    state: np.ndarray,
    subset: tuple[int, ...],
    shots_per_setting: int | None,
    seed: int | None = None,
    return_records: bool = False,
):
    """Shot-limited state estimate of a small subsystem.

    Measures all 3^k Pauli settings of the reduced state with
    ``shots_per_setting`` samples each (``None`` uses exact
    probabilities, the infinite-shot limit), reconstructs by linear
    inversion, and projects onto the physical set. Sampling uses only
    the explicitly seeded generator.
    """
    rho_exact = reduced_density_matrix(state, subset)
    k = len(subset)
    rng = np.random.default_rng(seed)

    records = []
    estimates: dict[tuple[str, ...], list[float]] = {}
    outcomes = np.arange(2**k)
    bits = (outcomes[:, None] >> (k - 1 - np.arange(k))[None, :]) & 1
    signs = 1.0 - 2.0 * bits
    for setting in itertools.product("XYZ", repeat=k):
        probs = _measurement_probabilities(rho_exact, setting)
        if shots_per_setting is None:
            freqs = probs
            counts = probs
            shots = 0
        else:
            if shots_per_setting < 1:
                raise ValueError("shots_per_setting must be >= 1 or None")
            counts = rng.multinomial(shots_per_setting, probs)
            freqs = counts / shots_per_setting
            shots = shots_per_setting
        records.append(
            TomographyRecord(setting=setting, counts=np.asarray(counts), shots=shots, seed=seed)
        )

        # every Pauli string supported on this setting gets an estimate;
        # strings with identities are averaged over compatible settings
        for support in itertools.product((0, 1), repeat=k):
            if not any(support):
                continue
            label = tuple(setting[q] if support[q] else "I" for q in range(k))
            mask = np.array(support, dtype=bool)
            value = float(np.sum(freqs * np.prod(signs[:, mask], axis=1)))
            estimates.setdefault(label, []).append(value)

    expectations = {label: float(np.mean(vals)) for label, vals in estimates.items()}
    expectations[("I",) * k] = 1.0

    rho_est = np.zeros((2**k, 2**k), dtype=complex)
    for label, mean in expectations.items():
        op = _PAULI[label[0]]
        for letter in label[1:]:
            op = np.kron(op, _PAULI[letter])
        rho_est += mean * op
    rho_est /= 2**k

    rho_est = project_to_physical(rho_est)
    if return_records:
        return rho_est, records
    return rho_est
