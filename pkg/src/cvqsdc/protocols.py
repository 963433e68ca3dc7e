"""Executable QSDC and CQD sessions over squeezed coherent states.

A session is a deterministic state machine driven by one seeded generator.
Blocks of time slots are carried as batched ``GaussianState`` objects, so a
party's operation on many slots is a single vectorized call.

Decoding rule
-------------
Messages always ride on a diagonal displacement ``m (1 + i)``. After the
receiver removes every known operation, the measured quadrature mean is
``gain_q * m`` plus known offsets, where ``gain = commute_ds(1 + i, -s)`` is
the image of the unit diagonal under ``S(-s)``. The receiver homodynes the
quadrature with the larger ``|gain_q|`` and divides, which inverts the
known affine phase-space map exactly. The per-slot readout noise is
``1 / (4 gain_q^2)``.

Verification budget
-------------------
``VerificationPolicy.aggregate_alpha`` is treated as the session-wide
false-abort budget. Half of it goes to the aggregate tests, split evenly
over every test the session can run (a mean and a variance test per check).
The other half is headroom for the per-sample bound and for run-to-run
spread, so an honest sampled session aborts with probability about
``aggregate_alpha / 2``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .channel_attacks import (
    NO_ATTACK,
    Attack,
    AttackType,
    dos_resend,
    gqcm_clone,
    intercept_measure_resend,
)
from .encoding import (
    EncoderConfig,
    bits_to_symbols,
    decode_value,
    encode_real,
    encode_symbol,
    symbols_to_bits,
)
from .gaussian_core import (
    VACUUM_VARIANCE,
    GaussianState,
    SqueezeParam,
    coherent,
    commute_ds,
    displace,
    squeeze,
)
from .measurement import VerificationPolicy, heterodyne, homodyne, verify_batch


class Mode(Enum):
    EXPECTATION = "expectation"
    SAMPLED = "sampled"


class WPolicy(Enum):
    SHARED = "shared_w"
    PER_SLOT = "per_slot_w"


class AbortReason(Enum):
    CONTROL_CHECK_FAILED = "ControlCheckFailed"
    DECOY_CHECK_FAILED = "DecoyCheckFailed"
    MALFORMED_FLOW = "MalformedFlow"


QSDC_LEGS = ("bob-alice", "alice-bob")
CQD_LEGS = ("charlie-alice", "alice-bob", "bob-charlie")
SMP_UNDETERMINED = "tie-undetermined"


def _enum(cls, value):
    return value if isinstance(value, cls) else cls(value)


@dataclass(frozen=True)
class QsdcConfig:
    n: int = 64
    mode: Mode = Mode.EXPECTATION
    policy: VerificationPolicy = field(default_factory=VerificationPolicy)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    payload_kind: str = "symbols"
    seed: int = 0
    alpha_scale: float = 2.0
    max_squeeze: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", _enum(Mode, self.mode))
        if self.n < 8 or self.n % 4:
            raise ValueError(f"QSDC needs n >= 8 and divisible by 4, got {self.n}")
        if self.payload_kind not in ("symbols", "real"):
            raise ValueError(f"payload_kind must be 'symbols' or 'real', got {self.payload_kind!r}")
        _check_secret_ranges(self.alpha_scale, self.max_squeeze)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode.value,
            "payload_kind": self.payload_kind,
            "seed": self.seed,
            "alpha_scale": self.alpha_scale,
            "max_squeeze": self.max_squeeze,
            "policy": vars(self.policy).copy(),
            "encoder": vars(self.encoder).copy(),
        }


@dataclass(frozen=True)
class CqdConfig:
    """CQD session size: Charlie prepares ``4n`` slots."""

    n: int = 16
    mode: Mode = Mode.EXPECTATION
    policy: VerificationPolicy = field(default_factory=VerificationPolicy)
    encoder: EncoderConfig = field(default_factory=EncoderConfig)
    w_policy: WPolicy = WPolicy.SHARED
    seed: int = 0
    alpha_scale: float = 2.0
    max_squeeze: float = 1.0

    def __post_init__(self):
        object.__setattr__(self, "mode", _enum(Mode, self.mode))
        object.__setattr__(self, "w_policy", _enum(WPolicy, self.w_policy))
        if self.n < 2:
            raise ValueError(f"CQD needs n >= 2, got {self.n}")
        _check_secret_ranges(self.alpha_scale, self.max_squeeze)

    def to_dict(self) -> dict:
        return {
            "n": self.n,
            "mode": self.mode.value,
            "w_policy": self.w_policy.value,
            "seed": self.seed,
            "alpha_scale": self.alpha_scale,
            "max_squeeze": self.max_squeeze,
            "policy": vars(self.policy).copy(),
            "encoder": vars(self.encoder).copy(),
        }


def _check_secret_ranges(alpha_scale, max_squeeze):
    if not alpha_scale > 0:
        raise ValueError("alpha_scale must be > 0")
    if not max_squeeze >= 0:
        raise ValueError("max_squeeze must be >= 0")


@dataclass(frozen=True)
class PrepRecord:
    """Secrets the preparing party holds for one slot."""

    slot: int
    amplitude: complex
    s: SqueezeParam

    def to_dict(self) -> dict:
        return {
            "slot": self.slot,
            "amplitude": [self.amplitude.real, self.amplitude.imag],
            "s": [self.s.r, self.s.theta],
        }


@dataclass
class Transcript:
    """Append-only log of one session."""

    protocol: str
    config: dict
    attack: dict
    events: list = field(default_factory=list)
    roles: dict = field(default_factory=dict)
    abort: dict | None = None
    result: dict = field(default_factory=dict)
    prep: list = field(default_factory=list, repr=False)

    @property
    def aborted(self) -> bool:
        return self.abort is not None

    @property
    def abort_reason(self) -> AbortReason | None:
        return None if self.abort is None else AbortReason(self.abort["reason"])

    def log(self, type_: str, **fields) -> dict:
        event = {"seq": len(self.events), "type": type_, **fields}
        self.events.append(event)
        return event

    def to_dict(self) -> dict:
        return {
            "protocol": self.protocol,
            "config": self.config,
            "attack": self.attack,
            "aborted": self.aborted,
            "abort": self.abort,
            "roles": self.roles,
            "events": self.events,
            "result": self.result,
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.to_dict(), **kwargs)


class _Abort(Exception):
    def __init__(self, reason: AbortReason, stage: str, report: dict | None = None):
        super().__init__(f"{reason.value} at {stage}")
        self.reason = reason
        self.stage = stage
        self.report = report


def _slots(idx) -> list:
    return [int(i) for i in idx]


def _pairs(z) -> list:
    z = np.asarray(z, dtype=complex).ravel()
    return [[float(v.real), float(v.imag)] for v in z]


def _squeeze_pairs(s: SqueezeParam) -> list:
    r = np.atleast_1d(s.r)
    th = np.atleast_1d(s.theta)
    return [[float(a), float(b)] for a, b in zip(r, th)]


def _records(amp, s: SqueezeParam) -> list:
    return [PrepRecord(j, complex(a), SqueezeParam(r, th))
            for j, (a, r, th) in enumerate(zip(amp, s.r, s.theta))]


def _subset(s: SqueezeParam, idx) -> SqueezeParam:
    return SqueezeParam(np.asarray(s.r)[idx], np.asarray(s.theta)[idx])


def readout_gain(s: SqueezeParam):
    """Complex image of the unit diagonal ``1 + i`` under ``S(-s)``."""
    return commute_ds(1 + 1j, s.negate())


def best_quadrature(gain):
    """Per slot, the quadrature (0 = X, 1 = P) where the diagonal message is loudest."""
    gain = np.asarray(gain, dtype=complex)
    return (np.abs(gain.imag) > np.abs(gain.real)).astype(int)


def _pick(z, q):
    z = np.asarray(z, dtype=complex)
    return np.where(np.asarray(q) == 0, z.real, z.imag)


class _Session:
    def __init__(self, protocol, config, attack: Attack, legs, n_checks):
        self.rng = np.random.default_rng(config.seed)
        self.mode = config.mode
        self.meas_rng = self.rng if self.mode is Mode.SAMPLED else None
        self.check_policy = config.policy.scaled(1.0 / (4 * n_checks))
        self.config = config
        self.attack = attack
        if attack.kind is not AttackType.NONE and attack.leg is not None and attack.leg not in legs:
            raise ValueError(f"attack leg {attack.leg!r} not in {legs}")
        self.t = Transcript(protocol, config.to_dict(), attack.to_dict())
        self.eve: dict = {}

    # preparation -----------------------------------------------------------
    def random_secrets(self, k):
        scale = self.config.alpha_scale
        z = scale * self.rng.standard_normal((k, 2))
        amp = z[:, 0] + 1j * z[:, 1]
        s = SqueezeParam(
            self.config.max_squeeze * self.rng.random(k), 2 * np.pi * self.rng.random(k)
        )
        return amp, s

    def balanced_quadratures(self, k):
        q = np.zeros(k, dtype=int)
        q[k // 2:] = 1
        return self.rng.permutation(q)

    # measurement and checks ------------------------------------------------
    def homodyne(self, states, q):
        return homodyne(states, q, self.meas_rng)

    def verify(self, by, stage, slots, samples, expected, reason):
        try:
            report = verify_batch(
                samples, expected, VACUUM_VARIANCE, self.check_policy,
                variance_test=self.mode is Mode.SAMPLED,
            )
        except ValueError as exc:
            self.t.log("verification", by=by, stage=stage, slots=_slots(slots), error=str(exc))
            raise _Abort(AbortReason.MALFORMED_FLOW, stage) from exc
        self.t.log("verification", by=by, stage=stage, slots=_slots(slots), report=report.to_dict())
        if not report.pass_:
            raise _Abort(reason, stage, report.to_dict())

    def abort(self, exc: _Abort):
        self.t.abort = {"reason": exc.reason.value, "stage": exc.stage, "report": exc.report}
        self.t.log("abort", reason=exc.reason.value, stage=exc.stage)
        _eve_summary(self)

    # channel ---------------------------------------------------------------
    def transmit(self, leg, states: GaussianState, slots) -> GaussianState:
        """Send a block over ``leg``, letting an attack on that leg act on it."""
        self.t.log("transmission", leg=leg, slots=_slots(slots))
        a = self.attack
        if not a.on(leg):
            return states
        if a.kind is AttackType.INTERCEPT_MEASURE_RESEND:
            resent, record = intercept_measure_resend(states, self.meas_rng)
            self.eve.setdefault("records", {})[leg] = record
            return resent
        if a.kind is AttackType.DENIAL_OF_SERVICE:
            return dos_resend(self.rng, a.amplitude_scale, size=len(slots))
        if a.kind is AttackType.GQCM:
            joint = gqcm_clone(states, a.gqcm)
            self.eve.setdefault("clones", {})[leg] = joint.eve()
            return joint.bob()
        return states

    def weighted_estimate(self, values, gain_q):
        """Inverse-variance weighted mean of per-slot estimates and its standard error."""
        w = 4.0 * np.asarray(gain_q) ** 2
        est = float(np.sum(w * values) / np.sum(w))
        se = float(np.sqrt(1.0 / np.sum(w))) if self.mode is Mode.SAMPLED else 0.0
        return est, se


# ---------------------------------------------------------------------------
# QSDC
# ---------------------------------------------------------------------------

def _qsdc_payload(config: QsdcConfig, message, n_msg):
    if config.payload_kind == "real":
        m = float(message)
        if not np.isfinite(m):
            raise ValueError("real message must be finite")
        return m, None
    if isinstance(message, str):
        symbols = bits_to_symbols(message)
        n_bits = len("".join(message.split()))
    else:
        symbols = np.asarray(message, dtype=int)
        n_bits = 3 * symbols.size
        if symbols.ndim != 1 or symbols.size == 0 or np.any((symbols < 0) | (symbols > 7)):
            raise ValueError("symbol message must be a non-empty sequence of integers in [0, 7]")
    if symbols.size > n_msg:
        raise ValueError(f"{symbols.size} symbols do not fit in {n_msg} message slots")
    return symbols, n_bits


def run_qsdc(config: QsdcConfig, message, attack: Attack = NO_ATTACK) -> Transcript:
    """One-way direct communication from Alice to Bob.

    ``message`` is a bit string or symbol sequence (``payload_kind="symbols"``;
    symbol ``i`` is repeated on message slots ``i, i + k, ...``) or a real
    number (``payload_kind="real"``; repeated on every message slot).
    """
    n = config.n
    n_msg = n // 4
    payload, n_bits = _qsdc_payload(config, message, n_msg)
    if attack.kind is AttackType.PARTICIPANT_CHARLIE:
        raise ValueError("participant attack needs a controller; QSDC has none")
    ses = _Session("qsdc", config, attack, QSDC_LEGS, n_checks=2)
    t = ses.t
    try:
        _qsdc_flow(ses, payload, n_bits, n_msg)
    except _Abort as exc:
        ses.abort(exc)
    return t


def _qsdc_flow(ses: _Session, payload, n_bits, n_msg):
    cfg, rng, t = ses.config, ses.rng, ses.t
    n = cfg.n
    all_slots = np.arange(n)

    # 1. Bob prepares S(s_j) D(alpha_j)|0> and sends the block
    alpha, s = ses.random_secrets(n)
    t.prep = _records(alpha, s)
    states = squeeze(coherent(alpha), s)
    t.log("preparation", by="bob", slots=_slots(all_slots))
    if ses.attack.kind is AttackType.INTERCEPT_DELAY_SWAP:
        t.log("transmission", leg="bob-alice", slots=_slots(all_slots))
        stored = states
        eve_alpha, eve_s = ses.random_secrets(n)
        states = squeeze(coherent(eve_alpha), eve_s)
    else:
        states = ses.transmit("bob-alice", states, all_slots)

    # 2. Alice picks control slots and announces their coordinates
    perm = rng.permutation(n)
    control = np.sort(perm[: n // 2])
    message_mode = np.sort(perm[n // 2:])
    t.log("announcement", by="alice", to="bob", what="control_slots", slots=_slots(control))

    # 3. Bob reveals control secrets; Alice unsqueezes, homodynes, verifies
    t.log("announcement", by="bob", to="alice", what="control_secrets", slots=_slots(control),
          values={"alpha": _pairs(alpha[control]), "s": _squeeze_pairs(_subset(s, control))})
    q = ses.balanced_quadratures(control.size)
    probe = squeeze(states[control], _subset(s, control).negate())
    samples = ses.homodyne(probe, q)
    t.log("measurement", by="alice", slots=_slots(control), quadratures=q.tolist())
    ses.verify("alice", "alice-control", control, samples, _pick(alpha[control], q),
               AbortReason.CONTROL_CHECK_FAILED)

    # 4. Alice encodes on n/4 message-mode slots, keeps n/4 as decoys
    perm = rng.permutation(message_mode.size)
    msg = np.sort(message_mode[perm[:n_msg]])
    decoy = np.sort(message_mode[perm[n_msg:]])
    t.roles = {"control": _slots(control), "decoy": _slots(decoy), "message": _slots(msg)}
    mm_states = states[message_mode]
    pos = np.searchsorted(message_mode, msg)
    if cfg.payload_kind == "real":
        sent_symbols = None
        beta = np.full(msg.size, encode_real(payload))
    else:
        sent_symbols = payload[np.arange(msg.size) % payload.size]
        beta = encode_symbol(sent_symbols, cfg.encoder, rng)
    shift = np.zeros(message_mode.size, dtype=complex)
    shift[pos] = beta
    mm_states = displace(mm_states, shift)
    t.log("encode", by="alice", slots=_slots(msg))

    if ses.attack.kind is AttackType.INTERCEPT_DELAY_SWAP:
        t.log("transmission", leg="alice-bob", slots=_slots(message_mode))
        mm_states = _delay_swap_forward(ses, mm_states, stored[message_mode],
                                        _subset(eve_s, message_mode), eve_alpha[message_mode])
    else:
        mm_states = ses.transmit("alice-bob", mm_states, message_mode)

    # 5. Bob unsqueezes and homodynes every message-mode slot
    s_mm = _subset(s, message_mode)
    gain = readout_gain(s_mm)
    q_mm = best_quadrature(gain)
    readings = ses.homodyne(squeeze(mm_states, s_mm.negate()), q_mm)
    t.log("measurement", by="bob", slots=_slots(message_mode), quadratures=q_mm.tolist())

    # 6. Alice reveals decoy coordinates; Bob checks them against his alphas
    t.log("announcement", by="alice", to="bob", what="decoy_slots", slots=_slots(decoy))
    dpos = np.searchsorted(message_mode, decoy)
    ses.verify("bob", "bob-decoy", decoy, readings[dpos],
               _pick(alpha[decoy], q_mm[dpos]), AbortReason.DECOY_CHECK_FAILED)

    # 7. Bob removes his alpha and inverts the readout gain
    g_q = _pick(gain[pos], q_mm[pos])
    r_est = (readings[pos] - _pick(alpha[msg], q_mm[pos])) / g_q
    noise_var = VACUUM_VARIANCE / g_q**2
    if cfg.payload_kind == "real":
        m_est, se = ses.weighted_estimate(r_est, g_q)
        t.result = {"message": float(payload), "decoded": m_est, "standard_error": se}
    else:
        slot_symbols = decode_value(r_est)
        k = payload.size
        decoded = np.array([
            np.bincount(slot_symbols[np.arange(msg.size) % k == i], minlength=8).argmax()
            for i in range(k)
        ])
        t.result = {
            "message_bits": symbols_to_bits(payload, n_bits),
            "decoded_bits": symbols_to_bits(decoded, n_bits),
            "decoded_symbols": decoded.tolist(),
            "slot_symbols_sent": sent_symbols.tolist(),
            "slot_symbols_decoded": np.atleast_1d(slot_symbols).tolist(),
            "slot_noise_variance": noise_var.tolist(),
        }
    t.log("decode", by="bob", slots=_slots(msg))
    _eve_summary(ses)


def _delay_swap_forward(ses, alice_states, bob_states, eve_s, eve_alpha):
    """Eve reads Alice's encoding off her own states and copies it onto Bob's."""
    gain = readout_gain(eve_s)
    q = best_quadrature(gain)
    y = ses.homodyne(squeeze(alice_states, eve_s.negate()), q)
    r_hat = (y - _pick(eve_alpha, q)) / _pick(gain, q)
    ses.eve["decoded"] = r_hat
    return displace(bob_states, r_hat * (1 + 1j))


def _eve_summary(ses):
    if "charlie_estimate" in ses.eve:
        ses.t.result["charlie_estimate_mA"] = ses.eve["charlie_estimate"]


# ---------------------------------------------------------------------------
# CQD
# ---------------------------------------------------------------------------

def run_cqd(config: CqdConfig, m_A: float, m_B: float, attack: Attack = NO_ATTACK) -> Transcript:
    """Two-way dialogue between Alice and Bob supervised by Charlie."""
    m_A, m_B = float(m_A), float(m_B)
    if not (np.isfinite(m_A) and np.isfinite(m_B)):
        raise ValueError("messages must be finite")
    ses = _Session("cqd", config, attack, CQD_LEGS, n_checks=2)
    try:
        _cqd_flow(ses, m_A, m_B, final="bob")
    except _Abort as exc:
        ses.abort(exc)
    return ses.t


def run_socialist_millionaire(assets_A: float, assets_B: float, config: CqdConfig,
                              attack: Attack = NO_ATTACK) -> Transcript:
    """Decide who is richer: Alice encodes ``+A``, Bob ``-B``, Charlie reads the sum.

    ``transcript.result["richer"]`` is ``"A"``, ``"B"`` or ``"tie-undetermined"``;
    a reading within three standard errors of zero (exactly zero in
    expectation mode) is undetermined.
    """
    if not (assets_A >= 0 and assets_B >= 0):
        raise ValueError("assets must be nonnegative")
    ses = _Session("smp", config, attack, CQD_LEGS, n_checks=2)
    try:
        _cqd_flow(ses, float(assets_A), -float(assets_B), final="charlie")
    except _Abort as exc:
        ses.abort(exc)
    return ses.t


def _cqd_flow(ses: _Session, m_A, m_B, final):
    cfg, rng, t = ses.config, ses.rng, ses.t
    n = cfg.n
    all_slots = np.arange(4 * n)

    # 1. Charlie prepares 4n squeezed coherent states
    gamma, s = ses.random_secrets(4 * n)
    t.prep = _records(gamma, s)
    states = squeeze(coherent(gamma), s)
    t.log("preparation", by="charlie", slots=_slots(all_slots))
    states = ses.transmit("charlie-alice", states, all_slots)

    # 2-3. Alice checks 2n controls with Charlie's revealed secrets
    perm = rng.permutation(4 * n)
    control = np.sort(perm[: 2 * n])
    message_mode = np.sort(perm[2 * n:])
    t.log("announcement", by="alice", to="charlie", what="control_slots", slots=_slots(control))
    t.log("announcement", by="charlie", to="alice", what="control_secrets", slots=_slots(control),
          values={"gamma": _pairs(gamma[control]), "s": _squeeze_pairs(_subset(s, control))})
    q = ses.balanced_quadratures(control.size)
    samples = ses.homodyne(squeeze(states[control], _subset(s, control).negate()), q)
    t.log("measurement", by="alice", slots=_slots(control), quadratures=q.tolist())
    ses.verify("alice", "alice-control", control, samples, _pick(gamma[control], q),
               AbortReason.CONTROL_CHECK_FAILED)

    # 4. Alice encodes on n slots, keeps n as second-round controls, squeezes all by w
    perm = rng.permutation(2 * n)
    msg = np.sort(message_mode[perm[:n]])
    ctrl2 = np.sort(message_mode[perm[n:]])
    t.roles = {"control": _slots(control), "decoy": _slots(ctrl2), "message": _slots(msg)}
    pos = np.searchsorted(message_mode, msg)
    cpos = np.searchsorted(message_mode, ctrl2)
    shift = np.zeros(2 * n, dtype=complex)
    shift[pos] = encode_real(m_A)
    mm = displace(states[message_mode], shift)
    t.log("encode", by="alice", slots=_slots(msg))
    k_w = 1 if cfg.w_policy is WPolicy.SHARED else 2 * n
    w = SqueezeParam(cfg.max_squeeze * rng.random(k_w), 2 * np.pi * rng.random(k_w))
    if k_w == 1:
        w = SqueezeParam(np.full(2 * n, w.r[0]), np.full(2 * n, w.theta[0]))
    mm = squeeze(mm, w)
    if ses.attack.on("alice-bob") and ses.attack.kind is AttackType.PARTICIPANT_CHARLIE:
        t.log("transmission", leg="alice-bob", slots=_slots(message_mode))
        mm = _charlie_intercept(ses, mm, _subset(s, message_mode), gamma[message_mode], pos)
    else:
        mm = ses.transmit("alice-bob", mm, message_mode)
    t.log("announcement", by="bob", to="alice", what="receipt", slots=_slots(message_mode))
    t.log("announcement", by="alice", to="bob", what="w_and_control_slots", slots=_slots(ctrl2),
          values={"w": _squeeze_pairs(w)})
    t.log("announcement", by="charlie", to="bob", what="control_secrets", slots=_slots(ctrl2),
          values={"gamma": _pairs(gamma[ctrl2]), "s": _squeeze_pairs(_subset(s, ctrl2))})

    # 5. Bob removes w, checks the second-round controls, encodes on the rest
    mm = squeeze(mm, w.negate())
    q2 = ses.balanced_quadratures(ctrl2.size)
    samples = ses.homodyne(squeeze(mm[cpos], _subset(s, ctrl2).negate()), q2)
    t.log("measurement", by="bob", slots=_slots(ctrl2), quadratures=q2.tolist())
    ses.verify("bob", "bob-control", ctrl2, samples, _pick(gamma[ctrl2], q2),
               AbortReason.CONTROL_CHECK_FAILED)
    shift = np.zeros(2 * n, dtype=complex)
    shift[pos] = encode_real(m_B)
    msg_states = displace(mm, shift)[pos]
    t.log("encode", by="bob", slots=_slots(msg))

    # 6. Charlie reveals message-slot secrets; the decoder strips S(s) D(gamma)
    decoder = "bob"
    if final == "charlie":
        msg_states = ses.transmit("bob-charlie", msg_states, msg)
        decoder = "charlie"
    else:
        t.log("announcement", by="charlie", to="bob", what="message_secrets", slots=_slots(msg),
              values={"gamma": _pairs(gamma[msg]), "s": _squeeze_pairs(_subset(s, msg))})
    s_msg = _subset(s, msg)
    gain = readout_gain(s_msg)
    qm = best_quadrature(gain)
    stripped = displace(squeeze(msg_states, s_msg.negate()), -gamma[msg])
    y = ses.homodyne(stripped, qm)
    t.log("measurement", by=decoder, slots=_slots(msg), quadratures=qm.tolist())
    g_q = _pick(gain, qm)
    m_sum = y / g_q
    est, se = ses.weighted_estimate(m_sum, g_q)

    if final == "charlie":
        threshold = 3.0 * se if ses.mode is Mode.SAMPLED else 1e-9
        richer = "A" if est > threshold else "B" if est < -threshold else SMP_UNDETERMINED
        t.log("decode", by="charlie", slots=_slots(msg))
        t.result = {"reading": est, "standard_error": se, "threshold": threshold, "richer": richer}
    else:
        t.log("announcement", by="bob", to="all", what="sum_values", slots=_slots(msg),
              values={"alpha_plus_beta": _pairs(m_sum * (1 + 1j))})
        t.log("decode", by="alice+bob", slots=_slots(msg))
        t.result = {
            "m_A": m_A,
            "m_B": m_B,
            "announced": _pairs(m_sum * (1 + 1j)),
            "sum_estimate": est,
            "standard_error": se,
            "alice_recovers_m_B": est - m_A,
            "bob_recovers_m_A": est - m_B,
        }
    _eve_summary(ses)


def _charlie_intercept(ses, states, s_mm, gamma_mm, msg_pos):
    """Charlie undoes only his own squeeze, heterodynes, and re-prepares."""
    record = heterodyne(squeeze(states, s_mm.negate()), ses.meas_rng)
    e = record[..., 0] + 1j * record[..., 1]
    gain = readout_gain(s_mm)
    g = np.stack([gain.real, gain.imag], axis=-1)
    resid = np.stack([(e - gamma_mm).real, (e - gamma_mm).imag], axis=-1)
    m_hat = np.sum(g * resid, axis=-1) / np.sum(g * g, axis=-1)
    ses.eve["charlie_estimate"] = float(np.mean(m_hat[msg_pos]))
    return squeeze(coherent(e), s_mm)


# ---------------------------------------------------------------------------
# transcript checks
# ---------------------------------------------------------------------------

def check_slot_conservation(t: Transcript) -> bool:
    """Every prepared slot is exactly one of control, decoy/second-round control, message."""
    if not t.roles:
        return True
    prepared = next(e["slots"] for e in t.events if e["type"] == "preparation")
    seen = t.roles["control"] + t.roles["decoy"] + t.roles["message"]
    return sorted(seen) == sorted(prepared) and len(set(seen)) == len(seen)


def check_no_leak(t: Transcript) -> bool:
    """Message-slot secrets are only revealed after Bob has verified and encoded."""
    msg = set(t.roles.get("message", []))
    bob_verified = bob_encoded = False
    for e in t.events:
        if e["type"] == "verification" and e["stage"] == "bob-control" and e.get("report", {}).get("pass"):
            bob_verified = True
        if e["type"] == "encode" and e["by"] == "bob":
            bob_encoded = True
        if e["type"] == "announcement" and e["what"].endswith("_secrets"):
            if msg & set(e["slots"]) and not (bob_verified and bob_encoded):
                return False
    return True


def check_abort_complete(t: Transcript) -> bool:
    """An aborted session has no decode and ends with the abort event."""
    if not t.aborted:
        return any(e["type"] == "decode" for e in t.events)
    return t.events[-1]["type"] == "abort" and not any(e["type"] == "decode" for e in t.events)
