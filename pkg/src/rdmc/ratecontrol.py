"""CTU-level bit allocation and QP derivation with importance-aware costs
and connectivity-gated QP clamping.

Allocation distributes the remaining picture budget over uncoded CTUs in
proportion to cost = SATD/3 + alpha * importance, re-solving after every
coded CTU so actual-vs-target drift is absorbed by the CTUs still to
come.  QP comes from a lambda-domain model (lambda = a * bpp^b,
QP = round(c1 ln lambda + c2)) whose scale parameter a is corrected
multiplicatively from observed bit production.

The final QP is clamped twice: to +-1 around the running mean QP of
coded CTUs, then to a band around the most-connected coded neighbor's
QP, tight (+-2) when boundary connectivity exceeds 0.7 and loose (+-9)
otherwise.  There is no picture-level QP clamp.
"""

import math

import numpy as np

from .roim import RoimMap

DEFAULT_ALPHA = 10000.0

# lambda-domain model defaults
LAMBDA_MODEL_A = 3.2003
LAMBDA_MODEL_B = -1.367
QP_LN_SCALE = 4.2005
QP_LN_OFFSET = 13.7122

QP_MIN = 0
QP_MAX = 51

MEAN_BAND = 1
TIGHT_CONNECTIVITY = 0.7
TIGHT_BAND = 2
LOOSE_BAND = 9


class RateControlError(ValueError):
    """Raised for out-of-order CTU retirement and similar state misuse."""


def clip(lo, hi, v):
    """Clamp v into [lo, hi]."""
    return min(max(v, lo), hi)


def _iround(v: float) -> int:
    """Round half away from zero."""
    return int(math.floor(v + 0.5)) if v >= 0 else -int(math.floor(-v + 0.5))


def ctu_cost(satd: float, importance: float, alpha: float = DEFAULT_ALPHA) -> float:
    """Allocation cost of one CTU: satd/3 + alpha * importance."""
    return satd / 3.0 + alpha * importance


class BudgetState:
    """Sequential bit-budget state over one picture's CTUs.

    Tracks consumed bits, the ordered uncoded set, the targets from the
    most recent allocation, the running mean of coded-CTU QPs, and the
    adaptive lambda-model scale.
    """

    def __init__(
        self,
        target_pic: int,
        num_ctus: int,
        qp_pic: int | None = None,
        model_a: float = LAMBDA_MODEL_A,
        model_b: float = LAMBDA_MODEL_B,
    ):
        if num_ctus <= 0:
            raise RateControlError("need at least one CTU")
        self.target_pic = int(target_pic)
        self.bits_coded = 0
        self.uncoded: list[int] = list(range(num_ctus))
        self.coded: set[int] = set()
        self.targets: dict[int, int] = {}
        self.overrun = False
        self.qp_pic = qp_pic
        self.model_a = float(model_a)
        self.model_b = float(model_b)
        self._model_a0 = float(model_a)
        self._qp_total = 0.0
        self._qp_count = 0

    @property
    def remaining(self) -> int:
        return self.target_pic - self.bits_coded

    @property
    def qp_cu_mean(self) -> float | None:
        """Mean QP over coded CTUs, None before the first retirement."""
        if self._qp_count == 0:
            return None
        return self._qp_total / self._qp_count


def allocate_ctu_target(state: BudgetState, costs) -> int:
    """Target bits for the next (head) uncoded CTU.

    Recomputes targets for every uncoded CTU as
    remaining * cost_k / sum(costs over uncoded), rounded per CTU, so
    the uncoded targets always sum to the remaining budget up to
    rounding.  All-zero costs split the budget equally.  A spent budget
    yields the 1-bit floor and sets the overrun flag.
    """
    if not state.uncoded:
        raise RateControlError("no uncoded CTUs to allocate")
    remaining = state.remaining
    if remaining <= 0:
        state.overrun = True
        state.targets = {k: 1 for k in state.uncoded}
        return 1
    sub = np.array([float(costs[k]) for k in state.uncoded])
    total = sub.sum()
    if total <= 0.0:
        share = remaining / len(state.uncoded)
        targets = {k: _iround(share) for k in state.uncoded}
    else:
        targets = {
            k: _iround(remaining * c / total) for k, c in zip(state.uncoded, sub)
        }
    head = state.uncoded[0]
    targets[head] = max(1, targets[head])
    state.targets = targets
    return targets[head]


def derive_qp(
    target_bits: int,
    ctu_area: int,
    model_a: float = LAMBDA_MODEL_A,
    model_b: float = LAMBDA_MODEL_B,
) -> int:
    """Integer QP for a bit target via the lambda-domain model.

    bpp = target/area, lambda = a * bpp^b, QP = round(c1 ln lambda + c2)
    clamped to [0, 51].  b < 0 makes QP non-increasing in the target.
    """
    bpp = max(int(target_bits), 1) / float(ctu_area)
    lam = model_a * bpp**model_b
    qp = _iround(QP_LN_SCALE * math.log(lam) + QP_LN_OFFSET)
    return clip(QP_MIN, QP_MAX, qp)


def select_anchor_neighbor(i: int, roim: RoimMap, coded) -> int | None:
    """Coded 4-neighbor of CTU i with the highest boundary connectivity.

    Ties go to the smaller index; None when no 4-neighbor is coded yet.
    """
    cols = roim.cols
    r, c = divmod(i, cols)
    neighbors = []
    if c > 0:
        neighbors.append(i - 1)
    if r > 0:
        neighbors.append(i - cols)
    if c < cols - 1:
        neighbors.append(i + 1)
    if r < roim.rows - 1:
        neighbors.append(i + cols)
    best = None
    best_mc = -1.0
    for j in sorted(neighbors):
        if j not in coded:
            continue
        m_c = roim.connectivity_between(i, j)
        if m_c > best_mc:
            best, best_mc = j, m_c
    return best


def constrain_qp(
    qp_est: int,
    anchor_qp: int | None = None,
    m_c: float | None = None,
    qp_cu_mean: float | None = None,
) -> int:
    """Clamp an estimated QP to the mean band, then the connectivity band.

    First clip to round(qp_cu_mean) +- 1 when coded CTUs exist, then to
    anchor_qp +- 2 when the anchor's connectivity exceeds 0.7 (else
    +- 9), then to [0, 51].  No picture-level clamp is applied.
    """
    qp = int(qp_est)
    if qp_cu_mean is not None:
        mid = _iround(qp_cu_mean)
        qp = clip(mid - MEAN_BAND, mid + MEAN_BAND, qp)
    if anchor_qp is not None:
        band = TIGHT_BAND if (m_c is not None and m_c > TIGHT_CONNECTIVITY) else LOOSE_BAND
        qp = clip(anchor_qp - band, anchor_qp + band, qp)
    return clip(QP_MIN, QP_MAX, qp)


def update_after_ctu(
    state: BudgetState, actual_bits: int, qp_used: int, index: int | None = None
) -> BudgetState:
    """Retire the head CTU: book its bits, fold its QP into the running
    mean, and correct the lambda-model scale from actual vs target.

    The scale update a <- a * sqrt(actual/target) is clamped to
    [a0/4, 4 a0] around the initial scale.
    """
    if index is None:
        if not state.uncoded:
            raise RateControlError("all CTUs already retired")
        index = state.uncoded[0]
    elif not state.uncoded or state.uncoded[0] != index:
        if index in state.coded:
            raise RateControlError(f"CTU {index} already retired")
        raise RateControlError(f"CTU {index} is not next in coding order")
    state.uncoded.pop(0)
    state.coded.add(index)
    state.bits_coded += int(actual_bits)
    state._qp_total += float(qp_used)
    state._qp_count += 1
    target = state.targets.pop(index, None)
    if target and target > 0 and actual_bits > 0:
        adapted = state.model_a * math.sqrt(actual_bits / target)
        state.model_a = clip(state._model_a0 / 4.0, state._model_a0 * 4.0, adapted)
    return state
