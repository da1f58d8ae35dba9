"""Dense complex vector and matrix kernel.

Vectors are 1-D and matrices 2-D ``numpy`` arrays of ``complex128``. Qubit 0
is the most significant bit of a basis index, so ``|01>`` has index 1 and
kets read left to right exactly as they are written.
"""
from __future__ import annotations

from functools import reduce
from itertools import product

import numpy as np

from .errors import DimensionMismatch, InvalidIndices

ATOL = 1e-9
STRICT_ATOL = 1e-12

SQRT2 = np.sqrt(2.0)


def as_vector(v) -> np.ndarray:
    arr = np.asarray(v, dtype=complex)
    if arr.ndim != 1 or arr.size < 1:
        raise DimensionMismatch(f"expected a non-empty 1-D vector, got shape {arr.shape}")
    return arr


def as_matrix(m) -> np.ndarray:
    arr = np.asarray(m, dtype=complex)
    if arr.ndim != 2 or arr.size < 1:
        raise DimensionMismatch(f"expected a 2-D matrix, got shape {arr.shape}")
    return arr


def n_qubits_of(dim: int) -> int:
    """Number of qubits for a Hilbert-space dimension that is a power of two."""
    n = int(dim).bit_length() - 1
    if dim < 1 or 2**n != dim:
        raise DimensionMismatch(f"dimension {dim} is not a power of two")
    return n


def ket(bits: str) -> np.ndarray:
    """Computational basis ket from a bit string, e.g. ``ket("01")``."""
    if not bits or set(bits) - {"0", "1"}:
        raise ValueError(f"not a bit string: {bits!r}")
    v = np.zeros(2 ** len(bits), dtype=complex)
    v[int(bits, 2)] = 1.0
    return v


def tensor(a, b, *rest) -> np.ndarray:
    """Kronecker product of vectors or of matrices (left factor is qubit 0)."""
    arrays = [np.asarray(x, dtype=complex) for x in (a, b, *rest)]
    if len({x.ndim for x in arrays}) != 1 or arrays[0].ndim not in (1, 2):
        raise DimensionMismatch("tensor needs all vectors or all matrices")
    return reduce(np.kron, arrays)


def tensor_power(a, n: int) -> np.ndarray:
    if n < 1:
        raise ValueError("tensor power needs n >= 1")
    return reduce(np.kron, [np.asarray(a, dtype=complex)] * n)


def adjoint(m) -> np.ndarray:
    return as_matrix(m).conj().T


def inner_product(bra_of, ket_) -> complex:
    """<bra_of|ket_>, conjugating the first argument."""
    a, b = as_vector(bra_of), as_vector(ket_)
    if a.shape != b.shape:
        raise DimensionMismatch(f"lengths differ: {a.size} vs {b.size}")
    return complex(np.vdot(a, b))


def outer_product(ket_, bra_of) -> np.ndarray:
    """|ket_><bra_of|."""
    return np.outer(as_vector(ket_), as_vector(bra_of).conj())


def matmul(a, b) -> np.ndarray:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape[1] != b.shape[0]:
        raise DimensionMismatch(f"cannot multiply {a.shape} by {b.shape}")
    return a @ b


def matvec(m, v) -> np.ndarray:
    m, v = as_matrix(m), as_vector(v)
    if m.shape[1] != v.size:
        raise DimensionMismatch(f"cannot apply {m.shape} matrix to length-{v.size} vector")
    return m @ v


def trace(m) -> complex:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        raise DimensionMismatch("trace of a non-square matrix")
    return complex(np.trace(m))


def is_unitary(m, atol: float = ATOL) -> bool:
    m = as_matrix(m)
    if m.shape[0] != m.shape[1]:
        return False
    return np.allclose(m @ m.conj().T, np.eye(m.shape[0]), atol=atol)


def is_hermitian(m, atol: float = ATOL) -> bool:
    m = as_matrix(m)
    return m.shape[0] == m.shape[1] and np.allclose(m, m.conj().T, atol=atol)


def check_targets(targets, n_qubits: int) -> tuple[int, ...]:
    if isinstance(targets, (int, np.integer)):
        targets = (targets,)
    targets = tuple(int(t) for t in targets)
    if not targets:
        raise InvalidIndices("at least one target qubit is required")
    if len(set(targets)) != len(targets):
        raise InvalidIndices(f"repeated qubit index in {targets}")
    if any(t < 0 or t >= n_qubits for t in targets):
        raise InvalidIndices(f"qubit index out of range in {targets} for {n_qubits} qubits")
    return targets


def embed_gate(g, on, n_qubits: int) -> np.ndarray:
    """Full 2^n x 2^n operator acting as ``g`` on qubits ``on`` and identity elsewhere.

    The i-th qubit of ``g`` is mapped onto ``on[i]``, so ``embed_gate(CNOT, (2, 0), 3)``
    uses qubit 2 as the control.
    """
    g = as_matrix(g)
    on = check_targets(on, n_qubits)
    k = len(on)
    if g.shape != (2**k, 2**k):
        raise DimensionMismatch(f"gate of shape {g.shape} cannot act on {k} qubit(s)")
    rest = [q for q in range(n_qubits) if q not in on]
    full = np.kron(g, np.eye(2 ** len(rest), dtype=complex))
    order = list(on) + rest
    if order == list(range(n_qubits)):
        return full
    # axis i of the reshaped operator belongs to qubit order[i]; sort back
    inv = np.argsort(order)
    t = full.reshape([2] * (2 * n_qubits))
    t = t.transpose(list(inv) + [n_qubits + i for i in inv])
    return t.reshape(2**n_qubits, 2**n_qubits)


def equal_up_to_phase(a, b, atol: float = ATOL) -> bool:
    """True when two normalized vectors differ only by a global phase."""
    return abs(abs(inner_product(a, b)) - 1.0) <= atol


def matrices_equal_up_to_phase(a, b, atol: float = ATOL) -> bool:
    a, b = as_matrix(a), as_matrix(b)
    if a.shape != b.shape:
        return False
    idx = np.unravel_index(np.argmax(np.abs(b)), b.shape)
    if abs(b[idx]) < atol:
        return np.allclose(a, b, atol=atol)
    phase = a[idx] / b[idx]
    if abs(abs(phase) - 1.0) > atol:
        return False
    return np.allclose(a, phase * b, atol=atol)


# Gate table ---------------------------------------------------------------

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)
H = np.array([[1, 1], [1, -1]], dtype=complex) / SQRT2
S = np.array([[1, 0], [0, 1j]], dtype=complex)
CNOT = np.array(
    [[1, 0, 0, 0], [0, 1, 0, 0], [0, 0, 0, 1], [0, 0, 1, 0]], dtype=complex
)
CZ = np.diag([1, 1, 1, -1]).astype(complex)
SWAP = np.array(
    [[1, 0, 0, 0], [0, 0, 1, 0], [0, 1, 0, 0], [0, 0, 0, 1]], dtype=complex
)
# Mach-Zehnder beam splitters
BS1 = H.copy()
BS2 = np.array([[-1, 1], [1, 1]], dtype=complex) / SQRT2

GATES = {
    "I": I2,
    "X": X,
    "Y": Y,
    "Z": Z,
    "H": H,
    "S": S,
    "CNOT": CNOT,
    "CZ": CZ,
    "SWAP": SWAP,
    "BS1": BS1,
    "BS2": BS2,
}

PAULIS = {"I": I2, "X": X, "Y": Y, "Z": Z}


def pauli_word(word: str) -> np.ndarray:
    """Operator product of a Pauli word, applied right to left: ``"ZX"`` is Z @ X."""
    m = I2
    for ch in word:
        m = m @ PAULIS[ch]
    return m


KET0 = ket("0")
KET1 = ket("1")
KET_PLUS = np.array([1, 1], dtype=complex) / SQRT2
KET_MINUS = np.array([1, -1], dtype=complex) / SQRT2
KET_PLUS_I = np.array([1, 1j], dtype=complex) / SQRT2
KET_MINUS_I = np.array([1, -1j], dtype=complex) / SQRT2

NAMED_KETS = {
    "0": KET0,
    "1": KET1,
    "+": KET_PLUS,
    "-": KET_MINUS,
    "+i": KET_PLUS_I,
    "-i": KET_MINUS_I,
}


def basis_strings(n: int) -> list[str]:
    return ["".join(bits) for bits in product("01", repeat=n)]
