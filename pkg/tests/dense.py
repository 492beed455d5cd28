"""Independent dense-matrix reference built from Kronecker products."""
import numpy as np

H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
X = np.array([[0, 1], [1, 0]], dtype=complex)
I2 = np.eye(2, dtype=complex)


def rx(theta):
    c, s = np.cos(theta / 2), np.sin(theta / 2)
    return np.array([[c, -1j * s], [-1j * s, c]])


def phase(phi):
    return np.diag([1, np.exp(1j * phi)])


def on_qubit(u, q, n):
    # index bit q is qubit q, so qubit 0 is the rightmost Kronecker factor
    out = np.eye(1, dtype=complex)
    for k in range(n - 1, -1, -1):
        out = np.kron(out, u if k == q else I2)
    return out


def controlled(u, controls, target, n):
    """``u`` on ``target`` where every (qubit, polarity) control matches."""
    dim = 2**n
    m = np.zeros((dim, dim), dtype=complex)
    for col in range(dim):
        if all(((col >> q) & 1) == pol for q, pol in controls):
            b = (col >> target) & 1
            for nb in (0, 1):
                row = (col & ~(1 << target)) | (nb << target)
                m[row, col] += u[nb, b]
        else:
            m[col, col] = 1
    return m


def dft(n):
    dim = 2**n
    j, k = np.meshgrid(np.arange(dim), np.arange(dim))
    return np.exp(2j * np.pi * j * k / dim) / np.sqrt(dim)


def bit_reverse(y, n):
    return int(format(y, f"0{n}b")[::-1], 2)
