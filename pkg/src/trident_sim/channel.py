"""Static Friis links with optional Markov fading, and the bootstrap
interference measurements readers use for frequency assignment."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import rf
from .assign import InterferenceMatrix
from .errors import ConfigError

DEFAULT_STATES_DB = (-6.0, 0.0, 6.0)
DEFAULT_TRANSITION = ((0.9, 0.05, 0.05), (0.05, 0.9, 0.05), (0.05, 0.05, 0.9))


@dataclass
class FadingChain:
    """One Markov chain per link over a shared set of dB offsets.

    Offsets add to path loss: a positive state is a deeper fade. With
    ``reciprocal`` both directions of a node pair share a state.
    """

    n_nodes: int
    states: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_STATES_DB))
    transition: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_TRANSITION))
    initial_state: int = 1
    reciprocal: bool = True
    seed: int = 0
    current: np.ndarray | None = None

    def __post_init__(self):
        self.states = np.asarray(self.states, dtype=float)
        self.transition = np.asarray(self.transition, dtype=float)
        k = len(self.states)
        if self.transition.shape != (k, k):
            raise ConfigError(f"transition must be {k}x{k}", "channel.transition")
        if not np.all(np.isfinite(self.states)):
            raise ConfigError("fading states must be finite", "channel.states_db")
        if np.any(self.transition < 0) or np.any(np.abs(self.transition.sum(axis=1) - 1) > 1e-9):
            raise ConfigError("transition rows must be non-negative and sum to 1", "channel.transition")
        if not 0 <= self.initial_state < k:
            raise ConfigError("initial_state out of range", "channel.initial_state")
        if self.reciprocal:
            iu = np.triu_indices(self.n_nodes, 1)
        else:
            iu = np.nonzero(~np.eye(self.n_nodes, dtype=bool))
        self._links = iu
        if self.current is None:
            self.current = np.full(len(iu[0]), self.initial_state, dtype=np.int64)
        self._cum = np.cumsum(self.transition, axis=1)
        self._cum[:, -1] = 1.0
        self._rng = np.random.default_rng(self.seed)

    @classmethod
    def identity(cls, n_nodes: int, states=DEFAULT_STATES_DB, initial_state: int = 1, **kw) -> FadingChain:
        return cls(n_nodes, np.asarray(states, float), np.eye(len(states)), initial_state, **kw)

    @property
    def n_links(self) -> int:
        return len(self.current)

    def step(self) -> FadingChain:
        u = self._rng.random(self.n_links)
        self.current = np.argmax(u[:, None] < self._cum[self.current], axis=1)
        return self

    def offsets(self) -> np.ndarray:
        """Per-link dB offsets as an (n, n) matrix with a zero diagonal."""
        out = np.zeros((self.n_nodes, self.n_nodes))
        vals = self.states[self.current]
        out[self._links] = vals
        if self.reciprocal:
            out[self._links[1], self._links[0]] = vals
        return out


def step_fading(chain: FadingChain) -> FadingChain:
    return chain.step()


@dataclass(frozen=True)
class LinkState:
    """One directed link. ``amplitude_gain`` is the complex-attenuation magnitude
    (alpha for the excitation path, beta for the backscatter path)."""

    src: str
    dst: str
    base_loss: float
    fading_offset: float = 0.0

    @property
    def total_loss(self) -> float:
        return self.base_loss + self.fading_offset

    @property
    def power_gain(self) -> float:
        return 10.0 ** (-self.total_loss / 10.0)

    @property
    def amplitude_gain(self) -> float:
        return 10.0 ** (-self.total_loss / 20.0)


def pairwise_distance(a, b) -> np.ndarray:
    a, b = np.atleast_2d(np.asarray(a, float)), np.atleast_2d(np.asarray(b, float))
    return np.linalg.norm(a[:, None, :] - b[None, :, :], axis=-1)


def received_power_dbm(readers, frequency: float, fading: np.ndarray | None = None,
                       ref_distance: float = 0.05) -> np.ndarray:
    """(n, n) matrix of carrier power (dBm) at reader j while reader i transmits."""
    pos = [r.position for r in readers]
    d = pairwise_distance(pos, pos)
    tx = np.array([r.tx_power_dbm for r in readers])
    g = np.array([r.gain_dbi for r in readers])
    loss = rf.path_loss_db(d, frequency, ref_distance)
    if fading is not None:
        loss = loss + fading
    return tx[:, None] + g[:, None] + g[None, :] - loss


def measure_interference(readers, frequency: float, fading: np.ndarray | None = None,
                         ref_distance: float = 0.05) -> InterferenceMatrix:
    """Bootstrap round: each reader transmits in turn, the others record power (mW)."""
    if len(readers) < 2:
        raise ConfigError("bootstrap measurement needs at least two readers", "readers")
    p = rf.dbm_to_mw(received_power_dbm(readers, frequency, fading, ref_distance))
    np.fill_diagonal(p, 0.0)
    return InterferenceMatrix(p)


def observe_vector(reader_id: int, m: InterferenceMatrix, assignment) -> np.ndarray:
    """What reader ``reader_id`` hears: co-band peers only, cross-band rejected."""
    f = np.asarray(assignment)
    v = m.m[:, reader_id].copy()
    v[f != f[reader_id]] = 0.0
    v[reader_id] = 0.0
    return v


def observe_network(m: InterferenceMatrix, assignment) -> np.ndarray:
    """All readers' observation vectors stacked (n, n); row j is reader j's view."""
    f = np.asarray(assignment)
    same = f[:, None] == f[None, :]
    out = (m.m * same).T.copy()
    np.fill_diagonal(out, 0.0)
    return out
