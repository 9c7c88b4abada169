"""Quantum instrumental statistics: Born rule, qACE and the angle-family optimizer.

Two qubits, A's measurement chosen by x and B's by a. Operators are stacked arrays:
``meas_a[x, a]`` and ``meas_b[a, b]`` are 2x2, the state is 4x4 over A⊗B.
"""
import logging
import math
from dataclasses import dataclass
from typing import Tuple

import numpy as np
from scipy.optimize import minimize
from scipy.stats import qmc

from .exceptions import InstrumentalError
from .inequalities_helper import evaluate_batch, get_inequality
from .scenario_helper import A_CARD, B_CARD, make_distribution, make_interventional

logger = logging.getLogger(__name__)

IDENTITY = np.eye(2, dtype=complex)
PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)

DEFAULT_GRID = 20
DEFAULT_STARTS = 8
DEFAULT_SEED = 0
NELDER_MEAD_TOLERANCE = 1e-10
NELDER_MEAD_MAX_EVALUATIONS = 20000
SETUP_TOLERANCE = 1e-9
OUTCOME_SIGNS = np.array([1.0, -1.0])


class InvalidSetupError(InstrumentalError):
    code = 'invalid-setup'


@dataclass(frozen=True, eq=False)
class QuantumSetup:
    state: np.ndarray
    meas_a: np.ndarray
    meas_b: np.ndarray

    @property
    def x_card(self):
        return self.meas_a.shape[0]


@dataclass(frozen=True)
class AngleFamily:
    state_angle: float
    theta: Tuple[float, ...]
    eta: Tuple[float, float]

    @property
    def x_card(self):
        return len(self.theta)

    def to_vector(self):
        return np.array([self.state_angle, *self.theta, *self.eta])

    @classmethod
    def from_vector(cls, vector, x_card):
        vector = [float(value) for value in vector]
        return cls(vector[0], tuple(vector[1:1 + x_card]), tuple(vector[1 + x_card:3 + x_card]))

    def state_vector(self):
        psi = np.zeros(4, dtype=complex)
        psi[0] = math.sin(self.state_angle)
        psi[3] = math.cos(self.state_angle)
        return psi

    def to_setup(self):
        psi = self.state_vector()
        return QuantumSetup(np.outer(psi, psi.conj()), projectors(self.theta), projectors(self.eta))

    def as_dict(self):
        return {'state_angle': self.state_angle, 'theta': list(self.theta), 'eta': list(self.eta)}


@dataclass(frozen=True, eq=False)
class QuantumOptimum:
    ineq_id: str
    family: AngleFamily
    alpha: float
    p_table: np.ndarray
    do_table: np.ndarray
    evaluations: int
    converged: bool


# --- Operators ---
def projectors(angles):
    """``1/2 (1 + (-1)^o (sin t X + cos t Z))`` for every angle t, shape ``(*angles.shape, 2, 2, 2)``."""
    angles = np.asarray(angles, dtype=np.float64)
    direction = (np.sin(angles)[..., None, None] * PAULI_X
                 + np.cos(angles)[..., None, None] * PAULI_Z)
    signs = OUTCOME_SIGNS.reshape((1,) * angles.ndim + (2, 1, 1))
    return 0.5 * (IDENTITY + signs * direction[..., None, :, :])


def _is_psd(matrix, tolerance):
    if not np.allclose(matrix, matrix.conj().T, atol=tolerance):
        return False
    return np.linalg.eigvalsh(matrix).min() >= -tolerance


def validate_setup(setup, tolerance=SETUP_TOLERANCE):
    """Every failed condition of the setup; an empty list means valid."""
    violations = []
    state = np.asarray(setup.state)
    if state.shape != (4, 4):
        return [f"state must be 4x4, got {state.shape}"]
    if abs(np.trace(state) - 1) > tolerance:
        violations.append(f"state trace is {np.trace(state).real:.6g}, not 1")
    if not _is_psd(state, tolerance):
        violations.append('state is not positive semidefinite')
    for label, operators, outcomes in (('A', setup.meas_a, A_CARD), ('B', setup.meas_b, B_CARD)):
        operators = np.asarray(operators)
        if operators.ndim != 4 or operators.shape[1:] != (outcomes, 2, 2):
            violations.append(f"{label} measurements must have shape (settings, 2, 2, 2), got {operators.shape}")
            continue
        for setting, povm in enumerate(operators):
            for outcome, element in enumerate(povm):
                if not _is_psd(element, tolerance):
                    violations.append(f"{label} element ({setting},{outcome}) is not positive semidefinite")
            if not np.allclose(povm.sum(axis=0), IDENTITY, atol=tolerance):
                violations.append(f"{label} measurement {setting} does not sum to identity")
    if np.asarray(setup.meas_b).shape[:1] != (A_CARD,):
        violations.append(f"B needs one measurement per value of a, got {np.asarray(setup.meas_b).shape[0]}")
    return violations


def check_setup(setup, tolerance=SETUP_TOLERANCE):
    violations = validate_setup(setup, tolerance)
    if violations:
        raise InvalidSetupError('; '.join(violations))


# --- Born rule ---
def born_table(setup):
    """p(a,b|x) = tr[(M^x_a ⊗ N^a_b) rho] as a float array ``[x, a, b]``."""
    rho = np.asarray(setup.state).reshape(2, 2, 2, 2)
    table = np.einsum('xaij,abkl,jlik->xab', setup.meas_a, setup.meas_b, rho).real
    return np.clip(table, 0.0, 1.0)


def born_probabilities(setup, p_x):
    check_setup(setup)
    table = born_table(setup)
    table = table / table.sum(axis=(1, 2), keepdims=True)
    return make_distribution(p_x, table, exact=False)


def do_table(setup):
    """p(b|do(a)) = tr[(1 ⊗ N^a_b) rho]; only B's reduced state enters."""
    rho = np.asarray(setup.state).reshape(2, 2, 2, 2)
    reduced = np.einsum('ilik->lk', rho)
    return np.clip(np.einsum('abkl,lk->ab', setup.meas_b, reduced).real, 0.0, 1.0)


def quantum_do(setup):
    check_setup(setup)
    return make_interventional(do_table(setup), exact=False)


def qace(setup):
    table = do_table(setup)
    return max(abs(table[a, b] - table[a2, b])
               for a in range(A_CARD) for a2 in range(A_CARD) for b in range(B_CARD))


# --- Batched angle family ---
def family_statistics(vectors, x_card):
    """Observed and interventional tables for many angle vectors, ``[n, x, a, b]`` and ``[n, a, b]``."""
    vectors = np.atleast_2d(np.asarray(vectors, dtype=np.float64))
    state_angle, theta, eta = vectors[:, 0], vectors[:, 1:1 + x_card], vectors[:, 1 + x_card:3 + x_card]
    psi = np.zeros((len(vectors), 2, 2), dtype=complex)
    psi[:, 0, 0] = np.sin(state_angle)
    psi[:, 1, 1] = np.cos(state_angle)
    meas_a, meas_b = projectors(theta), projectors(eta)
    p_table = np.einsum('nik,nxaij,nabkl,njl->nxab', psi.conj(), meas_a, meas_b, psi).real
    reduced = np.einsum('nik,nil->nkl', psi.conj(), psi)
    p_do = np.einsum('nabkl,nkl->nab', meas_b, reduced).real
    return p_table, p_do


def family_violation(ineq, vectors):
    """alpha = -K for every angle vector; for causal bounds this is C - qACE."""
    p_table, p_do = family_statistics(vectors, ineq.x_card)
    return -evaluate_batch(ineq, p_table, p_do)


def angle_box(x_card):
    """State angle in [0, pi), measurement angles in [0, 2 pi)."""
    upper = np.full(3 + x_card, 2 * math.pi)
    upper[0] = math.pi
    return np.zeros(3 + x_card), upper


def coarse_design(x_card, grid, seed):
    lower, upper = angle_box(x_card)
    sampler = qmc.Sobol(d=len(lower), scramble=True, seed=seed)
    exponent = max(1, math.ceil(math.log2(grid ** 3)))
    return qmc.scale(sampler.random_base2(m=exponent), lower, upper)


def maximize_violation(ineq, grid=DEFAULT_GRID, seed=DEFAULT_SEED, starts=DEFAULT_STARTS,
                       tolerance=NELDER_MEAD_TOLERANCE, max_evaluations=NELDER_MEAD_MAX_EVALUATIONS):
    """Best violation over the two-qubit angle family: coarse Sobol design, then Nelder-Mead."""
    if isinstance(ineq, str):
        ineq = get_inequality(ineq)
    x_card = ineq.x_card
    design = coarse_design(x_card, grid, seed)
    coarse = family_violation(ineq, design)
    order = np.argsort(-coarse, kind='stable')[:starts]
    logger.info(f"Coarse design for '{ineq.id}': {len(design)} points, best alpha {coarse[order[0]]:.6f}")

    def objective(vector):
        return -family_violation(ineq, vector)[0]

    best_vector, best_value, evaluations, converged = design[order[0]], -coarse[order[0]], len(design), False
    for start in order:
        result = minimize(objective, design[start], method='Nelder-Mead',
                          options={'xatol': tolerance, 'fatol': tolerance,
                                   'maxfev': max_evaluations, 'maxiter': max_evaluations})
        evaluations += result.nfev
        if not result.success:
            logger.warning(f"Nelder-Mead from start {int(start)} stopped early: {result.message}")
        if result.fun < best_value:
            best_vector, best_value, converged = result.x, result.fun, bool(result.success)
    family = AngleFamily.from_vector(best_vector, x_card)
    p_table, p_do = family_statistics(best_vector, x_card)
    logger.info(f"Best alpha for '{ineq.id}': {-best_value:.10f} after {evaluations} evaluations")
    return QuantumOptimum(ineq.id, family, float(-best_value), p_table[0], p_do[0], evaluations, converged)


# --- Random setups ---
def random_state(rng, rank=4):
    """Ginibre-sampled two-qubit density matrix of the given rank (rank 1 is Haar pure)."""
    ginibre = rng.standard_normal((4, rank)) + 1j * rng.standard_normal((4, rank))
    rho = ginibre @ ginibre.conj().T
    return rho / np.trace(rho).real


def random_family(rng, x_card):
    lower, upper = angle_box(x_card)
    return AngleFamily.from_vector(rng.uniform(lower, upper), x_card)


def random_setup(rng, x_card=2, rank=None):
    """Random state with random family measurements on both sides."""
    if rank is None:
        rank = int(rng.integers(1, 5))
    family = random_family(rng, x_card)
    return QuantumSetup(random_state(rng, rank), projectors(family.theta), projectors(family.eta))

