"""Quantum-theoretical reference: Pauli algebra, two-qubit states and ideal circuits."""

from __future__ import annotations

import cmath
import itertools
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from .data import CELLS, SummaryStats

HERMITIAN_TOL = 1e-12
JACOBI_TOL = 1e-13

I2 = np.eye(2, dtype=complex)
SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]], dtype=complex)
SZ = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SX, SY, SZ)


def _unit(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    if v.shape != (3,) or abs(np.linalg.norm(v) - 1) > 1e-12:
        raise ValueError(f"{v} is not a unit 3-vector")
    return v


def sigma_dot(v) -> np.ndarray:
    v = np.asarray(v, dtype=float)
    return v[0] * SX + v[1] * SY + v[2] * SZ


def planar(angle: float) -> np.ndarray:
    return np.array([math.cos(angle), math.sin(angle), 0.0])


# --- eigenvalues ------------------------------------------------------------


def jacobi_eigenvalues(h: np.ndarray, tol: float = JACOBI_TOL, max_sweeps: int = 100) -> np.ndarray:
    """Eigenvalues of a Hermitian matrix by cyclic complex Jacobi rotations, ascending."""
    a = np.array(h, dtype=complex)
    n = a.shape[0]
    if a.shape != (n, n) or np.max(np.abs(a - a.conj().T)) > HERMITIAN_TOL:
        raise ValueError("matrix is not Hermitian")
    scale = max(1.0, float(np.max(np.abs(a))))
    for _ in range(max_sweeps):
        off = math.sqrt(sum(abs(a[p, q]) ** 2 for p in range(n) for q in range(n) if p != q))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                # a unitary that makes the (p, q) element real, then a real rotation
                phase = apq / abs(apq)
                app, aqq = a[p, p].real, a[q, q].real
                theta = 0.5 * math.atan2(2 * abs(apq), aqq - app)
                c, s = math.cos(theta), math.sin(theta)
                j = np.eye(n, dtype=complex)
                j[p, p] = c
                j[q, q] = c
                j[p, q] = s * phase
                j[q, p] = -s * phase.conjugate()
                a = j.conj().T @ a @ j
                a[p, q] = a[q, p] = 0.0
    else:
        raise ArithmeticError("Jacobi sweeps did not converge")
    return np.sort(np.real(np.diag(a)))


# --- states -------------------------------------------------------------------


@dataclass(frozen=True)
class DensityMatrix:
    entries: np.ndarray
    eigenvalues: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        m = np.array(self.entries, dtype=complex)
        if m.shape not in ((2, 2), (4, 4)):
            raise ValueError("density matrix must be 2x2 or 4x4")
        if np.max(np.abs(m - m.conj().T)) > HERMITIAN_TOL:
            raise ValueError("density matrix is not Hermitian")
        if abs(np.trace(m) - 1) > HERMITIAN_TOL:
            raise ValueError("density matrix trace differs from 1")
        m.setflags(write=False)
        object.__setattr__(self, "entries", m)
        object.__setattr__(self, "eigenvalues", jacobi_eigenvalues(m))

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @property
    def is_psd(self) -> bool:
        return bool(self.eigenvalues[0] >= -HERMITIAN_TOL)

    def expect(self, op: np.ndarray) -> float:
        return float(np.real(np.trace(self.entries @ op)))


def spin_state(c) -> DensityMatrix:
    """(1 + c.sigma)/2 for |c| <= 1."""
    return DensityMatrix((I2 + sigma_dot(c)) / 2)


def projector(z: int, d) -> np.ndarray:
    if z not in (1, -1):
        raise ValueError("z must be +1 or -1")
    return (I2 + z * sigma_dot(_unit(d))) / 2


def projector_expectation(rho: DensityMatrix, z: int, d) -> float:
    if rho.dim != 2 or not rho.is_psd:
        raise ValueError("need a valid single-spin state")
    return rho.expect(projector(z, d))


def singlet_state() -> DensityMatrix:
    return DensityMatrix(nogo_matrix(1.0))


def product_state(m1, m2) -> DensityMatrix:
    return DensityMatrix(np.kron((I2 + sigma_dot(m1)) / 2, (I2 + sigma_dot(m2)) / 2))


def two_spin_expectations(rho: DensityMatrix, a, c) -> SummaryStats:
    sa = sigma_dot(_unit(a))
    sc = sigma_dot(_unit(c))
    return SummaryStats(
        rho.expect(np.kron(sa, I2)),
        rho.expect(np.kron(I2, sc)),
        rho.expect(np.kron(sa, sc)),
    )


def singlet_expectations(a, c) -> SummaryStats:
    return two_spin_expectations(singlet_state(), a, c)


def nogo_matrix(q: float) -> np.ndarray:
    """(1 - q sigma1.sigma2)/4."""
    ss = sum(np.kron(p, p) for p in PAULI)
    return (np.eye(4, dtype=complex) - q * ss) / 4


def nogo_check(q: float) -> tuple[bool, np.ndarray]:
    eig = jacobi_eigenvalues(nogo_matrix(q))
    return bool(eig[0] >= -HERMITIAN_TOL), eig


@dataclass(frozen=True)
class MomentTable15:
    u: tuple
    v: tuple
    w: tuple

    def __post_init__(self):
        u = tuple(float(x) for x in self.u)
        v = tuple(float(x) for x in self.v)
        w = tuple(tuple(float(x) for x in row) for row in self.w)
        if len(u) != 3 or len(v) != 3 or len(w) != 3 or any(len(r) != 3 for r in w):
            raise ValueError("need u, v of length 3 and a 3x3 w")
        object.__setattr__(self, "u", u)
        object.__setattr__(self, "v", v)
        object.__setattr__(self, "w", w)


def state_from_moments(m: MomentTable15) -> DensityMatrix:
    """(1 + u.sigma1 + v.sigma2 + sum w_ab sigma1^a sigma2^b)/4; PSD status is reported, not enforced."""
    rho = np.eye(4, dtype=complex)
    for i in range(3):
        rho += m.u[i] * np.kron(PAULI[i], I2) + m.v[i] * np.kron(I2, PAULI[i])
        for j in range(3):
            rho += m.w[i][j] * np.kron(PAULI[i], PAULI[j])
    return DensityMatrix(rho / 4)


def moments_from_state(rho: DensityMatrix) -> MomentTable15:
    if rho.dim != 4:
        raise ValueError("need a two-spin state")
    u = [rho.expect(np.kron(p, I2)) for p in PAULI]
    v = [rho.expect(np.kron(I2, p)) for p in PAULI]
    w = [[rho.expect(np.kron(p, r)) for r in PAULI] for p in PAULI]
    return MomentTable15(u, v, w)


# --- polarization-entangled photons ------------------------------------------------


def photon_state(r: float) -> np.ndarray:
    """(|HV> + r|VH>)/sqrt(1 + r^2) in the basis HH, HV, VH, VV."""
    return np.array([0.0, 1.0, r, 0.0]) / math.sqrt(1 + r * r)


def _polarizer(x: int, angle: float) -> np.ndarray:
    if x == 1:
        return np.array([math.cos(angle), math.sin(angle)])
    return np.array([-math.sin(angle), math.cos(angle)])


def photon_cell_probabilities(r: float, alpha: float, beta: float) -> list[float]:
    """Probabilities of (x, y) in the order (++, +-, -+, --)."""
    psi = photon_state(r)
    return [float(np.dot(np.kron(_polarizer(x, alpha), _polarizer(y, beta)), psi) ** 2) for x, y in CELLS]


def photon_correlation(r: float, alpha: float, beta: float) -> float:
    p = photon_cell_probabilities(r, alpha, beta)
    return sum(x * y * v for (x, y), v in zip(CELLS, p))


# --- two-qubit circuits ----------------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=complex) / math.sqrt(2)
_X = SX
_SXG = np.array([[1 + 1j, 1 - 1j], [1 - 1j, 1 + 1j]], dtype=complex) / 2


def _rz(theta: float) -> np.ndarray:
    return np.diag([cmath.exp(-0.5j * theta), cmath.exp(0.5j * theta)])


@dataclass(frozen=True)
class Circuit2Q:
    """Gate list over qubits 0 and 1; qubit 0 is the most significant bit."""

    gates: tuple

    def __post_init__(self):
        gates = tuple(tuple(g) for g in self.gates)
        for g in gates:
            name = g[0]
            if name in ("X", "H", "Sx"):
                qubits = (g[1],)
            elif name == "Rz":
                qubits = (g[1],)
                float(g[2])
            elif name == "CNOT":
                qubits = (g[1], g[2])
                if g[1] == g[2]:
                    raise ValueError("CNOT needs distinct qubits")
            else:
                raise ValueError(f"unknown gate {name!r}")
            if any(q not in (0, 1) for q in qubits):
                raise ValueError(f"bad qubit index in {g}")
        object.__setattr__(self, "gates", gates)


def _single(u: np.ndarray, q: int) -> np.ndarray:
    return np.kron(u, I2) if q == 0 else np.kron(I2, u)


def _gate_matrix(g) -> np.ndarray:
    name = g[0]
    if name == "X":
        return _single(_X, g[1])
    if name == "H":
        return _single(_H, g[1])
    if name == "Sx":
        return _single(_SXG, g[1])
    if name == "Rz":
        return _single(_rz(float(g[2])), g[1])
    ctrl, tgt = g[1], g[2]
    m = np.zeros((4, 4), dtype=complex)
    for b0, b1 in itertools.product((0, 1), repeat=2):
        bits = [b0, b1]
        out = list(bits)
        if bits[ctrl]:
            out[tgt] ^= 1
        m[2 * out[0] + out[1], 2 * b0 + b1] = 1
    return m


def simulate(c: Circuit2Q, check_norm: bool = True) -> np.ndarray:
    psi = np.zeros(4, dtype=complex)
    psi[0] = 1
    for g in c.gates:
        psi = _gate_matrix(g) @ psi
        if check_norm and abs(np.linalg.norm(psi) - 1) > 1e-12:
            raise ArithmeticError(f"norm drift after {g}")
    return psi


def circuit_probabilities(c: Circuit2Q) -> dict:
    psi = simulate(c)
    return {(b0, b1): float(abs(psi[2 * b0 + b1]) ** 2) for b0 in (0, 1) for b1 in (0, 1)}


def circuit_expectations(c: Circuit2Q) -> SummaryStats:
    """Averages with outcome x = 1 - 2b."""
    p = circuit_probabilities(c)
    e1 = sum((1 - 2 * b0) * v for (b0, _), v in p.items())
    e2 = sum((1 - 2 * b1) * v for (_, b1), v in p.items())
    e12 = sum((1 - 2 * b0) * (1 - 2 * b1) * v for (b0, b1), v in p.items())
    return SummaryStats(e1, e2, e12)


def singlet_circuit(alpha: float, beta: float, i: int = 0, j: int = 1) -> Circuit2Q:
    """Singlet preparation followed by rotated measurements."""
    return Circuit2Q(
        (
            ("X", i),
            ("X", j),
            ("H", i),
            ("CNOT", i, j),
            ("H", i),
            ("Rz", i, alpha),
            ("H", i),
            ("H", j),
            ("Rz", j, beta),
            ("H", j),
        )
    )


def _native_h(q: int) -> list:
    return [("Rz", q, math.pi / 2), ("Sx", q), ("Rz", q, math.pi / 2)]


def singlet_circuit_native(alpha: float, beta: float, i: int = 0, j: int = 1) -> Circuit2Q:
    """The same circuit written with Rz, Sx, X and CNOT only."""
    gates = [("X", i), ("X", j)] + _native_h(i) + [("CNOT", i, j)]
    for q, ang in ((i, alpha), (j, beta)):
        gates += _native_h(q) + [("Rz", q, ang)] + _native_h(q)
    return Circuit2Q(tuple(gates))


def transpile_equivalence(c1: Circuit2Q, c2: Circuit2Q) -> float:
    """Max amplitude difference after aligning the global phase."""
    p1 = simulate(c1)
    p2 = simulate(c2)
    k = int(np.argmax(np.abs(p1)))
    if abs(p2[k]) == 0:
        return float(np.max(np.abs(p1 - p2)))
    phase = p1[k] / p2[k]
    phase /= abs(phase)
    return float(np.max(np.abs(p1 - phase * p2)))


# --- CHSH and Fisher information ------------------------------------------------------------


def chsh_quantum(rho: DensityMatrix, a, b, c, d) -> float:
    """|E(a,c) - E(a,d) + E(b,c) + E(b,d)| for state rho."""
    e = [two_spin_expectations(rho, x, y).e12 for x, y in ((a, c), (a, d), (b, c), (b, d))]
    return abs(e[0] - e[1] + e[2] + e[3])


def cirelson_max(a, b, c, d) -> float:
    e = [singlet_expectations(x, y).e12 for x, y in ((a, c), (a, d), (b, c), (b, d))]
    return abs(e[0] - e[1] + e[2] + e[3])


def cirelson_grid_search(points: int = 32) -> tuple[float, tuple]:
    """Maximize the singlet CHSH value over planar angles on a uniform grid."""
    grid = np.arange(points) * (2 * math.pi / points)
    vec = {g: planar(g) for g in grid}
    best, arg = -1.0, None
    for a, b, c, d in itertools.product(grid, repeat=4):
        v = cirelson_max(vec[a], vec[b], vec[c], vec[d])
        if v > best:
            best, arg = v, (a, b, c, d)
    return best, arg


def fisher_information(e12: Callable[[float], float], theta_grid: Sequence[float], h: float = 1e-5) -> list[float]:
    """(dE/dtheta)^2 / (1 - E^2) with a centered difference."""
    out = []
    for t in theta_grid:
        e = e12(t)
        if abs(e) >= 1:
            raise ValueError(f"|E| = 1 at theta = {t}; the information is singular there")
        de = (e12(t + h) - e12(t - h)) / (2 * h)
        out.append(de * de / (1 - e * e))
    return out
