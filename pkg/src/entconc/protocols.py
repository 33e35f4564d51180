"""Entanglement concentration by local photon subtraction.

Ideal filters act on pure two-mode states with ladder operators.  The
realistic pipeline models the taps as beam splitters of reflectance ``R``
against vacuum ancillas followed by on-off detectors; it is evaluated with
single-mode Kraus maps so that no four-mode density matrix is ever built.
:func:`run_bruteforce_oracle` builds the four-mode state vector instead and
serves as an independent check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Union

import numpy as np

from .errors import ParameterGuardError, TruncationError, ZeroSuccessError
from .fock import (
    DensityMatrix,
    FockOperator,
    StateVector,
    annihilation,
    apply_kraus,
    apply_to_state,
    conjugate_mode,
    creation,
    embed,
    hermitian_part,
    identity,
)
from .gaussian_ops import (
    MAX_DISPLACEMENT,
    MAX_SQUEEZING,
    beam_splitter_unitary,
    displacement_operator,
    squeezing_operator,
)
from .measures import EntanglementReport, log_negativity, log_negativity_pure, trace_distance
from .states import (
    MAX_NORM_DEFICIT,
    DetectorSpec,
    LossSpec,
    TmsvSpec,
    apply_loss,
    inefficiency_reduction,
    loss_kraus,
    tmsv_pure,
)

MIN_CUTOFF = 4
MIN_SUCCESS_PROBABILITY = 1e-15
BRUTEFORCE_MAX_CUTOFF = 10
DETECTOR_MODELS = ("reparametrize", "ancilla_loss")


@dataclass(frozen=True)
class NoLocalOp:
    pass


@dataclass(frozen=True)
class Displacement:
    alpha: complex
    beta: complex

    def __post_init__(self):
        for name, v in (("alpha", self.alpha), ("beta", self.beta)):
            if abs(v) > MAX_DISPLACEMENT:
                raise TruncationError(
                    f"|{name}| = {abs(v):.3g} exceeds the displacement guard {MAX_DISPLACEMENT}"
                )


@dataclass(frozen=True)
class Squeezing:
    s: float

    def __post_init__(self):
        if abs(self.s) > MAX_SQUEEZING:
            raise TruncationError(
                f"|s| = {abs(self.s):.3g} exceeds the squeezing guard {MAX_SQUEEZING}"
            )


LocalOp = Union[NoLocalOp, Displacement, Squeezing]


@dataclass(frozen=True)
class ProtocolParams:
    """Physical settings of one concentration run.

    ``detector_model`` selects how a detector efficiency below one is
    simulated: ``"reparametrize"`` swaps it for perfect detectors behind a
    reduced reflectance and an extra signal loss, ``"ancilla_loss"`` puts the
    loss on the tapped beam in front of the detector.  With
    ``drop_inefficiency_loss`` the extra signal loss of the first model is
    neglected, as is customary for ``R << 1``.
    """

    lam: float
    reflectance: float = 0.1
    eta: float = 1.0
    nu: float = 0.0
    local_op: LocalOp = field(default_factory=NoLocalOp)
    cutoff: int = 10
    detector_model: str = "reparametrize"
    drop_inefficiency_loss: bool = False

    def __post_init__(self):
        if self.cutoff < MIN_CUTOFF:
            raise TruncationError(
                f"cutoff {self.cutoff} is below {MIN_CUTOFF}; two-photon terms would sit on "
                f"the truncation edge"
            )
        tmsv = TmsvSpec(self.lam, self.cutoff)
        if tmsv.norm_deficit > MAX_NORM_DEFICIT:
            raise TruncationError(
                f"TMSV with lambda={self.lam} loses {tmsv.norm_deficit:.2e} of its norm at "
                f"cutoff {self.cutoff} (limit {MAX_NORM_DEFICIT:.0e}); raise the cutoff"
            )
        LossSpec(self.nu)
        DetectorSpec(self.eta)
        if not 0.0 <= self.reflectance < 1.0:
            raise ParameterGuardError(f"reflectance must lie in [0, 1), got {self.reflectance}")
        if not isinstance(self.local_op, (NoLocalOp, Displacement, Squeezing)):
            raise TypeError(f"unsupported local operation {self.local_op!r}")
        if self.detector_model not in DETECTOR_MODELS:
            raise ParameterGuardError(
                f"detector_model must be one of {DETECTOR_MODELS}, got {self.detector_model!r}"
            )

    def with_op(self, local_op: LocalOp) -> "ProtocolParams":
        return replace(self, local_op=local_op)

    def displaced(self, alpha: complex, beta: complex | None = None) -> "ProtocolParams":
        """Copy with displacement ``(alpha, beta)``; ``beta`` defaults to ``-alpha``."""
        return replace(self, local_op=Displacement(alpha, -alpha if beta is None else beta))


@dataclass(frozen=True)
class ConcentrationOutcome:
    rho_out_unnormalized: DensityMatrix
    success_probability: float
    rho_out_normalized: DensityMatrix
    params: ProtocolParams
    entanglement: EntanglementReport

    @property
    def log_negativity(self) -> float:
        return self.entanglement.log_negativity


# ---------------------------------------------------------------- ideal filters


def _filtered(op: FockOperator, psi: StateVector, allow_zero: bool) -> StateVector:
    if psi.modes != 2:
        raise ValueError(f"filters act on two-mode states, got {psi.modes} modes")
    out = op @ psi
    if not allow_zero and out.norm_squared < 1e-30:
        raise ZeroSuccessError("filter output has zero norm; nothing to herald")
    return out


def _ladder_pair(cutoff: int) -> tuple[FockOperator, FockOperator, FockOperator, FockOperator]:
    a, ad = annihilation(cutoff), creation(cutoff)
    return embed(a, 1, 2), embed(a, 2, 2), embed(ad, 1, 2), embed(ad, 2, 2)


def ideal_subtraction_filter(psi: StateVector, allow_zero: bool = False) -> StateVector:
    """``(a x b)|psi>``, unnormalized."""
    a, b, _, _ = _ladder_pair(psi.cutoff)
    return _filtered(a @ b, psi, allow_zero)


def ideal_displaced_filter(
    psi: StateVector, alpha: complex, beta: complex, allow_zero: bool = False
) -> StateVector:
    """``(a + alpha) x (b + beta)|psi>``, the subtraction conjugated by local displacements."""
    a, b, _, _ = _ladder_pair(psi.cutoff)
    one = identity(psi.cutoff, 2)
    return _filtered((a + alpha * one) @ (b + beta * one), psi, allow_zero)


def ideal_squeezed_filter(psi: StateVector, s: float, allow_zero: bool = False) -> StateVector:
    """``[a cosh s + a^dag sinh s] x [b cosh s + b^dag sinh s]|psi>``."""
    if abs(s) > MAX_SQUEEZING:
        raise TruncationError(f"|s| = {abs(s):.3g} exceeds the squeezing guard {MAX_SQUEEZING}")
    a, b, ad, bd = _ladder_pair(psi.cutoff)
    c, sh = math.cosh(s), math.sinh(s)
    return _filtered((c * a + sh * ad) @ (c * b + sh * bd), psi, allow_zero)


def ideal_nonlocal_filter(psi: StateVector, allow_zero: bool = False) -> StateVector:
    """``(a + b)|psi>``: one photon removed coherently from either mode."""
    a, b, _, _ = _ladder_pair(psi.cutoff)
    return _filtered(a + b, psi, allow_zero)


# ----------------------------------------------------------- realistic pipeline


def local_op_matrices(local_op: LocalOp, cutoff: int) -> tuple[np.ndarray, np.ndarray] | None:
    """Single-mode matrices applied to modes A and B, or ``None`` for no operation."""
    if isinstance(local_op, Displacement):
        return (
            displacement_operator(local_op.alpha, cutoff).matrix,
            displacement_operator(local_op.beta, cutoff).matrix,
        )
    if isinstance(local_op, Squeezing):
        s = squeezing_operator(local_op.s, cutoff).matrix
        return s, s
    return None


def shared_state(params: ProtocolParams) -> DensityMatrix:
    """TMSV sent through the per-mode loss channel: the state Alice and Bob start from."""
    rho = tmsv_pure(TmsvSpec(params.lam, params.cutoff)).density_matrix()
    loss = LossSpec(params.nu)
    return apply_loss(apply_loss(rho, 1, loss), 2, loss)


def _apply_local_op(rho: DensityMatrix, local_op: LocalOp) -> DensityMatrix:
    mats = local_op_matrices(local_op, rho.cutoff)
    if mats is None:
        return rho
    m = rho.matrix
    for mode, u in zip((1, 2), mats):
        m = conjugate_mode(m, u, mode, 2, rho.cutoff)
    return DensityMatrix(hermitian_part(m), 2, rho.cutoff, normalized=False)


def _tap(params: ProtocolParams) -> tuple[float, np.ndarray]:
    """Effective tap reflectance and per-``k`` no-click weights for the chosen detector model."""
    k = np.arange(params.cutoff + 1)
    if params.detector_model == "ancilla_loss":
        return params.reflectance, (1.0 - params.eta) ** k
    r_eff, _ = inefficiency_reduction(params.eta, params.reflectance)
    return r_eff, (k == 0).astype(float)


def pre_tap_state(params: ProtocolParams) -> DensityMatrix:
    """State arriving at the tap beam splitters (after channel loss and the local op)."""
    sigma = _apply_local_op(shared_state(params), params.local_op)
    if params.detector_model == "reparametrize" and not params.drop_inefficiency_loss:
        _, t_tilde = inefficiency_reduction(params.eta, params.reflectance)
        extra = LossSpec(1.0 - t_tilde)
        sigma = apply_loss(apply_loss(sigma, 1, extra), 2, extra)
    return sigma


def tap_maps(reflectance: float, no_click_weights: np.ndarray, cutoff: int):
    """Kraus lists of the tap channel and of its no-click part.

    The tap with a vacuum ancilla has Kraus operators
    ``K_k = sqrt(R^k / k!) (1 - R)^{n/2} a^k`` (k photons sent to the
    ancilla).  Tracing the ancilla gives ``Lambda = sum_k K_k . K_k^dag``; a
    detector that stays dark with probability ``w_k`` on ``k`` photons gives
    the no-click map ``V = sum_k w_k K_k . K_k^dag``.
    """
    kraus = loss_kraus(reflectance, cutoff)
    no_click = [math.sqrt(w) * k for w, k in zip(no_click_weights, kraus) if w > 0]
    return kraus, no_click


def inclusion_exclusion_terms(sigma: DensityMatrix, reflectance: float, no_click_weights):
    """The four terms ``Lambda_A Lambda_B``, ``V_A Lambda_B``, ``Lambda_A V_B``, ``V_A V_B`` of sigma."""
    channel, no_click = tap_maps(reflectance, no_click_weights, sigma.cutoff)
    lam_b = apply_kraus(sigma, channel, 2, normalized=False)
    v_b = apply_kraus(sigma, no_click, 2, normalized=False)
    return (
        apply_kraus(lam_b, channel, 1).matrix,
        apply_kraus(lam_b, no_click, 1).matrix,
        apply_kraus(v_b, channel, 1).matrix,
        apply_kraus(v_b, no_click, 1).matrix,
    )


def _click_kraus(reflectance: float, no_click_weights, cutoff: int) -> list[np.ndarray]:
    # Lambda - V written as one Kraus sum, so the subtraction never happens numerically
    kraus = loss_kraus(reflectance, cutoff)
    return [math.sqrt(1.0 - w) * k for w, k in zip(no_click_weights, kraus) if w < 1.0]


def heralded_state(params: ProtocolParams) -> DensityMatrix:
    """Unnormalized click-click output ``rho_out``; its trace is the success probability.

    Equals ``Lambda_A Lambda_B - V_A Lambda_B - Lambda_A V_B + V_A V_B`` applied
    to the pre-tap state, evaluated as ``(Lambda - V)_A (Lambda - V)_B`` with
    each difference expanded into its Kraus terms.
    """
    sigma = pre_tap_state(params)
    r, w = _tap(params)
    click = _click_kraus(r, w, params.cutoff)
    out = apply_kraus(apply_kraus(sigma, click, 2, normalized=False), click, 1)
    return out


def _outcome(params: ProtocolParams, rho_out: DensityMatrix) -> ConcentrationOutcome:
    p = rho_out.trace
    if not p >= MIN_SUCCESS_PROBABILITY:
        raise ZeroSuccessError(
            f"success probability {p:.3e} is below {MIN_SUCCESS_PROBABILITY:.0e}; "
            f"the heralded state is numerically meaningless"
        )
    rho_out.check_physical()
    normalized = rho_out.normalize().check_physical()
    return ConcentrationOutcome(rho_out, p, normalized, params, log_negativity(normalized))


def run_realistic(params: ProtocolParams) -> ConcentrationOutcome:
    """Heralded output of the beam-splitter / on-off detector protocol."""
    return _outcome(params, heralded_state(params))


def click_probabilities(params: ProtocolParams) -> tuple[float, float]:
    """Probability that detector A (resp. B) clicks, irrespective of the other one."""
    sigma = pre_tap_state(params)
    r, w = _tap(params)
    click = _click_kraus(r, w, params.cutoff)
    return (
        apply_kraus(sigma, click, 1, normalized=False).trace,
        apply_kraus(sigma, click, 2, normalized=False).trace,
    )


# ---------------------------------------------------------------- brute force


def run_bruteforce_oracle(params: ProtocolParams) -> ConcentrationOutcome:
    """Four-mode state-vector evaluation of the heralded state.

    Modes are ordered (A, B, C, D) with C and D the ancillas.  The local
    operation, the two beam-splitter unitaries and the detector POVM are
    applied as explicit matrices; the output is the click-click branch of the
    four POVM branches, whose sum is checked against the unconditioned state.
    Detector efficiency is modelled by the dark-count-free POVM element
    ``Pi_0 = sum_k (1 - eta)^k |k><k|``.
    """
    if params.nu != 0.0:
        raise ParameterGuardError("the brute-force oracle needs a pure input (nu = 0)")
    if params.cutoff > BRUTEFORCE_MAX_CUTOFF:
        raise ParameterGuardError(
            f"cutoff {params.cutoff} exceeds {BRUTEFORCE_MAX_CUTOFF}: the four-mode vector "
            f"would not fit in memory comfortably"
        )
    c = params.cutoff
    d = c + 1
    psi = tmsv_pure(TmsvSpec(params.lam, c))
    mats = local_op_matrices(params.local_op, c)
    if mats is not None:
        psi = apply_to_state(mats[1], apply_to_state(mats[0], psi, 1), 2)
    # (A, B) x |00>_CD
    big = np.zeros((d, d, d, d), dtype=complex)
    big[:, :, 0, 0] = psi.amplitudes.reshape(d, d)
    u = beam_splitter_unitary(params.reflectance, c).matrix.reshape(d, d, d, d)
    # U_AC acts on axes (0, 2), U_BD on axes (1, 3)
    big = np.einsum("acxz,xbzw->abcw", u, big)
    big = np.einsum("bdyw,aycw->abcd", u, big)

    no_click = np.diag((1.0 - params.eta) ** np.arange(d))
    povm = {0: no_click, 1: np.eye(d) - no_click}
    branches = {}
    for i in (0, 1):
        for j in (0, 1):
            sc = np.sqrt(np.clip(np.diag(povm[i]), 0.0, None))
            sd = np.sqrt(np.clip(np.diag(povm[j]), 0.0, None))
            phi = big * sc[None, None, :, None] * sd[None, None, None, :]
            phi = phi.reshape(d * d, d * d)
            branches[(i, j)] = phi @ phi.conj().T
    total = big.reshape(d * d, d * d)
    unconditioned = total @ total.conj().T
    if np.abs(sum(branches.values()) - unconditioned).max() > 1e-12:
        raise AssertionError("POVM branches do not sum to the unconditioned state")
    rho = DensityMatrix(hermitian_part(branches[(1, 1)]), 2, c, normalized=False)
    return _outcome(params, rho)


# ------------------------------------------------------------- ideal limit


@dataclass(frozen=True)
class IdealLimitRecord:
    reflectances: tuple[float, ...]
    trace_distances: tuple[float, ...]
    log_negativities: tuple[float, ...]
    ideal_log_negativity: float
    ideal_state: StateVector


def ideal_reference_state(params: ProtocolParams) -> StateVector:
    """Normalized ``(a x b) (U_A x U_B)|TMSV>``: the weak-tap limit of the realistic output."""
    psi = tmsv_pure(TmsvSpec(params.lam, params.cutoff))
    mats = local_op_matrices(params.local_op, params.cutoff)
    if mats is not None:
        psi = apply_to_state(mats[1], apply_to_state(mats[0], psi, 1), 2)
    return ideal_subtraction_filter(psi).normalized()


def realistic_to_ideal_limit(
    params: ProtocolParams, reflectances=(0.1, 0.05, 0.02, 0.01)
) -> IdealLimitRecord:
    """Trace distance between the realistic output and the ideal-filter state as R shrinks.

    The residual distance at finite R comes from the tap loss on the signal
    and from on-off detectors that also click on two or more photons.
    """
    if params.nu != 0.0:
        raise ParameterGuardError("the ideal-limit comparison needs a pure input (nu = 0)")
    ideal = ideal_reference_state(params)
    target = ideal.density_matrix()
    dists, ens = [], []
    for r in reflectances:
        out = run_realistic(replace(params, reflectance=r))
        dists.append(trace_distance(out.rho_out_normalized, target))
        ens.append(out.log_negativity)
    return IdealLimitRecord(
        tuple(reflectances), tuple(dists), tuple(ens), log_negativity_pure(ideal), ideal
    )
