import functools

import numpy as np
import pytest

SIGMA = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def dense_word(word: str) -> np.ndarray:
    return functools.reduce(np.kron, [SIGMA[c] for c in word])


def dense_xxz(couplings: np.ndarray, delta: float) -> np.ndarray:
    """Brute-force chain Hamiltonian with s = sigma / 2, built from Kronecker products."""
    n = couplings.shape[0]
    H = np.zeros((2 ** n, 2 ** n), dtype=complex)
    for i in range(n):
        for j in range(i + 1, n):
            for a, w in (("X", 1.0), ("Y", 1.0), ("Z", delta)):
                word = ["I"] * n
                word[i] = word[j] = a
                H += 0.25 * w * couplings[i, j] * dense_word("".join(word))
    return H


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


ACCEPTANCE_LINES: dict[int, str] = {}


def record_criterion(number: int, ok: bool, detail: str) -> None:
    line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
    ACCEPTANCE_LINES[number] = line
    print(line)


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])
