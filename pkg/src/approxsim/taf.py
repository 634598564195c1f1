"""Temporal output memoization (TAF).

Each thread keeps a short window of its own accurately computed outputs.  Once
the window is full and its relative standard deviation drops below the
threshold, the thread replays its last accurate output for the next
``p_size`` invocations, then clears the window and starts over.
"""

from __future__ import annotations

import enum
import math
from collections import deque
from dataclasses import dataclass, field

SIZEOF_REAL = 8
STATE_HEADER_BYTES = 16  # mode, fill count, remaining predictions, padding


@dataclass(frozen=True)
class TafConfig:
    h_size: int
    p_size: int
    threshold: float

    def __post_init__(self):
        if self.h_size < 1:
            raise ValueError(f"h_size must be >= 1, got {self.h_size}")
        if self.p_size < 1:
            raise ValueError(f"p_size must be >= 1, got {self.p_size}")
        if not self.threshold >= 0:
            raise ValueError(f"threshold must be >= 0, got {self.threshold}")


class Mode(enum.Enum):
    FILLING = "filling"
    CHECKING = "checking"
    PREDICTING = "predicting"


@dataclass
class TafState:
    h_size: int
    window: deque = field(default_factory=deque)
    mode: Mode = Mode.FILLING
    remaining_predictions: int = 0
    last_output: object = None

    @classmethod
    def fresh(cls, cfg: TafConfig) -> "TafState":
        return cls(cfg.h_size, deque(maxlen=cfg.h_size))


def state_bytes(cfg: TafConfig, out_dims: int = 1) -> int:
    return cfg.h_size * out_dims * SIZEOF_REAL + STATE_HEADER_BYTES


def rsd(window) -> float:
    """Population standard deviation over |mean|.

    Zero mean gives 0 when the window is constant and ``inf`` otherwise.
    """
    n = len(window)
    if n == 0:
        raise ValueError("rsd of an empty window")
    mean = math.fsum(window) / n
    var = math.fsum((x - mean) ** 2 for x in window) / n
    sigma = math.sqrt(var)
    if mean == 0.0:
        return 0.0 if sigma == 0.0 else math.inf
    return sigma / abs(mean)


def _as_tuple(value) -> tuple:
    if isinstance(value, (int, float)):
        return (float(value),)
    return tuple(float(v) for v in value)


def window_is_stable(window, threshold: float) -> bool:
    # Every output column must pass; RSD has to be strictly below the bound.
    for col in zip(*window):
        if not rsd(col) < threshold:
            return False
    return True


def wants_approx(state: TafState) -> bool:
    return state.mode is Mode.PREDICTING and state.last_output is not None


def will_check(state: TafState) -> bool:
    """True if an accurate evaluation now would be followed by an RSD check."""
    if state.mode is Mode.CHECKING:
        return True
    return state.mode is Mode.FILLING and len(state.window) == state.h_size - 1


def _consume_prediction(state: TafState) -> None:
    state.remaining_predictions -= 1
    if state.remaining_predictions == 0:
        state.window.clear()
        state.mode = Mode.FILLING


def taf_advance(state: TafState, cfg: TafConfig, approx: bool, evaluate):
    """Advance one invocation with the path already decided.

    ``approx`` may disagree with :func:`wants_approx` when a warp or team vote
    overrides the thread.  A thread forced onto the approximate path replays
    its last output without touching its window; a predicting thread forced
    onto the accurate path still spends one prediction slot.
    """
    if approx and state.last_output is not None:
        if state.mode is Mode.PREDICTING:
            _consume_prediction(state)
        return state.last_output, True

    out = evaluate()
    if state.mode is Mode.PREDICTING:
        _consume_prediction(state)
        return out, False

    state.window.append(_as_tuple(out))
    state.last_output = out
    if len(state.window) == cfg.h_size:
        if window_is_stable(state.window, cfg.threshold):
            state.mode = Mode.PREDICTING
            state.remaining_predictions = cfg.p_size
        else:
            state.mode = Mode.CHECKING
    return out, False


def taf_step(state: TafState, cfg: TafConfig, evaluate):
    """Thread-level TAF: the thread's own state machine picks the path."""
    return taf_advance(state, cfg, wants_approx(state), evaluate)


def taf_reference_oracle(outputs, cfg: TafConfig, policy: str = "clear"):
    """Replay TAF over one thread's full accurate output sequence.

    Written as a straight loop with its own statistics so it can be used to
    check :func:`taf_step`.  ``policy="slide"`` keeps the window after a
    prediction run instead of clearing it; it is only kept for comparison.
    """
    if policy not in ("clear", "slide"):
        raise ValueError(f"unknown policy {policy!r}")
    trace = []
    hist: list[tuple] = []
    left = 0
    last = None
    for value in outputs:
        if left > 0:
            trace.append((last, True))
            left -= 1
            if left == 0 and policy == "clear":
                hist = []
            continue
        trace.append((value, False))
        last = value
        hist.append(_as_tuple(value))
        if len(hist) > cfg.h_size:
            hist.pop(0)
        if len(hist) < cfg.h_size:
            continue
        stable = True
        for col in zip(*hist):
            mu = sum(col) / len(col)
            sd = (sum((c - mu) * (c - mu) for c in col) / len(col)) ** 0.5
            r = (0.0 if sd == 0 else math.inf) if mu == 0 else sd / abs(mu)
            stable = stable and r < cfg.threshold
        if stable:
            left = cfg.p_size
    return trace


def cpu_chunk_trace(outputs, n_threads: int, cfg: TafConfig):
    """TAF with CPU-style contiguous chunks: thread t owns one block of indices.

    Returns the per-index (output, approximated) trace in index order.
    """
    n = len(outputs)
    chunk = -(-n // n_threads) if n else 0
    trace = []
    for t in range(n_threads):
        trace += taf_reference_oracle(outputs[t * chunk:(t + 1) * chunk], cfg)
    return trace
