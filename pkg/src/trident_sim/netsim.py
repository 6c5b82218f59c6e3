"""Packet-level simulator of a multi-reader backscatter network.

Two modes share one traffic model and one capture model:

``trident``
    Every reader radiates continuously on its own band. Each tag picks the band
    with the strongest excitation, toggles its strong or weak load pair and
    reflects mainly in that band.
``tdma``
    All readers share one carrier. Readers that interfere are split into slot
    groups by greedy colouring and take turns. Tags reflect whatever carrier
    reaches them.

A packet decodes iff its SINR stays at or above the capture threshold for the
whole airtime.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from . import rf
from .assign import GaConfig, assign_genetic, build_graph, maybe_reallocate
from .channel import FadingChain, measure_interference, observe_network, pairwise_distance
from .errors import ConfigError
from .layout import TAG_COVERAGE_M, place_tags, rescale_spacing
from .scenario import Reader, Scenario, Tag
from .tag import BandDecision, TagProfile, detect_band, differential_gain_db

SWEEP_PARAMETERS = ("reporting_rate", "tag_count", "reader_spacing", "deployment")

# stream ids for SeedSequence([seed, stream, ...])
_ARRIVALS, _DETECT, _FADING, _PLACEMENT, _SWEEP = 1, 2, 3, 4, 5


@dataclass
class SimResult:
    mode: str
    reader_ids: list[str]
    tag_ids: list[str]
    reader_throughput_bps: np.ndarray
    offered: np.ndarray
    delivered: np.ndarray
    collided: np.ndarray
    suppressed: np.ndarray
    interference_energy: np.ndarray  # mW*s per reader
    tag_home: np.ndarray  # reader each tag reports to, -1 if silent
    decoded_at: np.ndarray  # packets decoded per reader
    reader_bands: np.ndarray | None = None
    tag_bands: np.ndarray | None = None
    slot_groups: list[list[int]] | None = None
    decisions: list[BandDecision] = field(default_factory=list)

    @property
    def overall_throughput_bps(self) -> float:
        return float(self.reader_throughput_bps.sum())

    def tag_throughput_bps(self, packet_bits: int, duration_s: float) -> np.ndarray:
        return self.delivered * packet_bits / duration_s


def interference_threshold_mw(sc: Scenario) -> float:
    """Reader-to-reader power below which two readers may share a band.

    Worst case: the victim tag sits at read range r of reader j and the
    interfering tag sits at range r of reader i on the line towards j, i.e.
    D - r from j. Both legs scale as distance^-2, so the victim keeps the
    capture margin c only while D >= r * (1 + 10^(c/20)). The threshold is the
    carrier power one reader receives from another at that separation.
    """
    if sc.sim.threshold_mw is not None:
        return sc.sim.threshold_mw
    d = sc.sim.read_range_m * (1 + 10 ** (sc.sim.capture_threshold_db / 20))
    tx = max(r.tx_power_dbm for r in sc.readers)
    g = max(r.gain_dbi for r in sc.readers)
    p = tx + 2 * g - rf.path_loss_db(d, sc.measurement_frequency, sc.channel.ref_distance_m)
    return float(rf.dbm_to_mw(p))


def fading_chain(sc: Scenario, n_nodes: int, stream: int = 0) -> FadingChain:
    c = sc.channel
    seed = np.random.SeedSequence([sc.seed, _FADING, stream]).generate_state(1)[0]
    if c.static:
        return FadingChain.identity(n_nodes, c.states_db, c.initial_state, reciprocal=c.reciprocal, seed=int(seed))
    return FadingChain(n_nodes, np.array(c.states_db), np.array(c.transition), c.initial_state,
                       c.reciprocal, int(seed))


def _fading_snapshot(sc: Scenario) -> np.ndarray:
    n = len(sc.readers) + len(sc.tags)
    chain = fading_chain(sc, n)
    for _ in range(sc.channel.burn_in_steps):
        chain.step()
    return chain.offsets()


def reader_bands(sc: Scenario, fading: np.ndarray | None = None) -> np.ndarray:
    """Preset bands when every reader carries one, otherwise the genetic assignment."""
    if all(r.band is not None for r in sc.readers):
        return np.array([r.band for r in sc.readers])
    if len(sc.readers) == 1:
        return np.zeros(1, dtype=np.int64)
    m = measure_interference(sc.readers, sc.measurement_frequency, fading, sc.channel.ref_distance_m)
    return assign_genetic(m, sc.ga, interference_threshold_mw(sc)).assignment


def greedy_slots(g: np.ndarray) -> list[list[int]]:
    """Welsh-Powell colouring; each colour class becomes one TDMA slot group."""
    n = g.shape[0]
    adj = g > 0
    order = sorted(range(n), key=lambda i: (-int(adj[i].sum()), i))
    color = [-1] * n
    for v in order:
        used = {color[u] for u in range(n) if adj[v, u] and color[u] >= 0}
        c = 0
        while c in used:
            c += 1
        color[v] = c
    return [[i for i in range(n) if color[i] == c] for c in range(max(color) + 1)]


def packet_starts(sc: Scenario, n_tags: int) -> list[np.ndarray]:
    tr, dur = sc.traffic, sc.sim.duration_s
    tau = tr.packet_duration_s
    period = 1.0 / tr.reporting_rate_pps
    out = []
    for t in range(n_tags):
        rng = np.random.default_rng(np.random.SeedSequence([sc.seed, _ARRIVALS, t]))
        if tr.arrival == "periodic":
            count = int(math.floor(dur * tr.reporting_rate_pps + 1e-9))
            phase = rng.uniform(0.0, period)
            k = np.arange(count)
            starts = phase + k * period + rng.uniform(0.0, 1.0, count) * tr.jitter * (period - tau)
        else:
            gaps = rng.exponential(period, size=int(3 * dur / period) + 16)
            starts = []
            t_free, t_arr = 0.0, 0.0
            for gap in gaps:
                t_arr += gap
                if t_arr >= dur:
                    break
                s = max(t_arr, t_free)  # one packet on air at a time
                starts.append(s)
                t_free = s + tau
            starts = np.array(starts)
        out.append(np.asarray(starts, float))
    return out


def _decode(start, end, listeners, rx, noise_mw, capture_lin):
    """Decode every packet; returns (ok, reader) with reader = -1 on failure.

    ``listeners[p]`` lists the readers that may decode packet p and ``rx[p, j]``
    is its received power (mW) at reader j. Interference is piecewise constant,
    so the worst case is checked at the packet start and at every overlapping
    packet start inside the airtime.
    """
    n = len(start)
    order = np.argsort(start, kind="stable")
    s_sorted = start[order]
    max_len = float(np.max(end - start)) if n else 0.0
    ok = np.zeros(n, bool)
    reader = np.full(n, -1, np.int64)
    for p in range(n):
        if not listeners[p]:
            continue
        lo = np.searchsorted(s_sorted, start[p] - max_len, side="right")
        hi = np.searchsorted(s_sorted, end[p], side="left")
        cand = order[lo:hi]
        cand = cand[(cand != p) & (end[cand] > start[p])]
        points = np.concatenate([[start[p]], start[cand][start[cand] > start[p]]])
        best, best_j = -1.0, -1
        for j in listeners[p]:
            sig = rx[p, j]
            worst = 0.0
            if cand.size:
                pw = rx[cand, j]
                cover = (start[cand][None, :] <= points[:, None]) & (end[cand][None, :] > points[:, None])
                worst = float((cover * pw[None, :]).sum(axis=1).max())
            sinr = sig / (noise_mw + worst)
            if sinr >= capture_lin and sinr > best:
                best, best_j = sinr, j
        if best_j >= 0:
            ok[p], reader[p] = True, best_j
    return ok, reader


def _geometry(sc: Scenario):
    rpos = [r.position for r in sc.readers]
    tpos = [t.position for t in sc.tags]
    d_rt = pairwise_distance(rpos, tpos)  # (R, T)
    tx = np.array([r.tx_power_dbm for r in sc.readers])
    gr = np.array([r.gain_dbi for r in sc.readers])
    gt = np.array([t.gain_dbi for t in sc.tags])
    return d_rt, tx, gr, gt


def _trident_link_budget(sc: Scenario, fading: np.ndarray, rng_detect):
    """Band decisions and per-tag received backscatter power at every reader (mW)."""
    R, T = len(sc.readers), len(sc.tags)
    d_rt, tx, gr, gt = _geometry(sc)
    fade_rt = fading[:R, R:]
    bands = reader_bands(sc, fading[:R, :R])
    f_r = np.array(sc.bands_hz)[bands]
    extra = sc.channel.tag_link_loss_db
    leg = rf.path_loss_db(d_rt, f_r[:, None], sc.channel.ref_distance_m) + fade_rt + extra  # (R, T)
    inc_dbm = tx[:, None] + gr[:, None] + gt[None, :] - leg
    inc_mw = rf.dbm_to_mw(inc_dbm)

    decisions, rx = [], np.zeros((T, R))
    for t, tag in enumerate(sc.tags):
        prof = tag.profile
        per_band = []
        for k, fc in enumerate(sc.bands_hz):
            gain = rf.dbm_to_mw(rf.filter_gain_db(prof.filter.tuned(fc), f_r))
            per_band.append(float(rf.mw_to_dbm(np.sum(inc_mw[:, t] * gain))))
        dec = detect_band(prof, per_band, rng_detect[t])
        decisions.append(dec)
        if dec.silent:
            continue
        rx[t] = rf.dbm_to_mw(_backscatter_dbm(sc, t, dec, bands, f_r, inc_mw, leg, gt, gr))
    return bands, decisions, rx


def _backscatter_dbm(sc, t, dec, bands, f_r, inc_mw, leg, gt, gr) -> np.ndarray:
    """Power (dBm) of tag t's data-bearing reflection at every reader.

    Reader j demodulates on its own carrier, so the tag's reflection of every
    same-band carrier is seen through the filter at f_r[j].
    """
    prof = sc.tags[t].profile
    filt = prof.filter.tuned(sc.bands_hz[dec.selected_band])
    out = np.empty(len(bands))
    for j in range(len(bands)):
        carrier = float(rf.mw_to_dbm(inc_mw[bands == bands[j], t].sum()))
        out[j] = (carrier + differential_gain_db(dec, filt, f_r[j], prof.oob_residual)
                  + gt[t] + gr[j] - leg[j, t])
    return out


def backscatter_selectivity(sc: Scenario) -> tuple[np.ndarray, np.ndarray]:
    """Received backscatter (dBm) when each tag is forced onto each band.

    Returns ``(p, bands)`` with ``p[t, j, k]`` the power reader j sees from tag t
    reflecting on band k with its strong load pair, and ``bands`` the reader
    band assignment. ``p[t, j, bands[j]]`` is the in-band reference.
    """
    sc.validate()
    R, T, K = len(sc.readers), len(sc.tags), len(sc.bands_hz)
    fading = _fading_snapshot(sc)
    d_rt, tx, gr, gt = _geometry(sc)
    bands = reader_bands(sc, fading[:R, :R])
    f_r = np.array(sc.bands_hz)[bands]
    leg = (rf.path_loss_db(d_rt, f_r[:, None], sc.channel.ref_distance_m) + fading[:R, R:]
           + sc.channel.tag_link_loss_db)
    inc_mw = rf.dbm_to_mw(tx[:, None] + gr[:, None] + gt[None, :] - leg)
    p = np.empty((T, R, K))
    for t, tag in enumerate(sc.tags):
        for k in range(K):
            dec = BandDecision(k, False, False, tag.profile.strong_pair)
            p[t, :, k] = _backscatter_dbm(sc, t, dec, bands, f_r, inc_mw, leg, gt, gr)
    return p, bands


def _run_trident(sc: Scenario, fading: np.ndarray) -> SimResult:
    R, T = len(sc.readers), len(sc.tags)
    rng_detect = [np.random.default_rng(np.random.SeedSequence([sc.seed, _DETECT, t])) for t in range(T)]
    bands, decisions, rx_tag = _trident_link_budget(sc, fading, rng_detect)

    home = np.full(T, -1)
    for t, dec in enumerate(decisions):
        if dec.silent:
            continue
        on_band = np.nonzero(bands == dec.selected_band)[0]
        if on_band.size:
            home[t] = on_band[np.argmax(rx_tag[t, on_band])]

    starts = packet_starts(sc, T)
    tau = sc.traffic.packet_duration_s
    offered = np.array([len(s) for s in starts])
    sent = [t for t in range(T) if home[t] >= 0]
    src = np.concatenate([np.full(len(starts[t]), t) for t in sent]) if sent else np.zeros(0, int)
    start = np.concatenate([starts[t] for t in sent]) if sent else np.zeros(0)
    end = start + tau
    listeners = [[int(home[t])] for t in src]
    ok, where = _decode(start, end, listeners, rx_tag[src], rf.dbm_to_mw(sc.sim.noise_floor_dbm),
                        10 ** (sc.sim.capture_threshold_db / 10))

    delivered = np.bincount(src[ok], minlength=T)
    transmitted = np.bincount(src, minlength=T)
    bits = np.bincount(where[ok], minlength=R) * sc.traffic.packet_bits
    energy = np.zeros(R)
    for j in range(R):
        foreign = home[src] != j
        energy[j] = rx_tag[src[foreign], j].sum() * tau
    return SimResult("trident", [r.id for r in sc.readers], [t.id for t in sc.tags],
                     bits / sc.sim.duration_s, offered, delivered, transmitted - delivered,
                     offered - transmitted, energy, home, np.bincount(where[ok], minlength=R), bands,
                     np.array([d.selected_band for d in decisions]), None, decisions)


def _run_tdma(sc: Scenario, fading: np.ndarray) -> SimResult:
    R, T = len(sc.readers), len(sc.tags)
    f = sc.measurement_frequency
    d_rt, tx, gr, gt = _geometry(sc)
    if R == 1:
        groups = [[0]]
    else:
        m = measure_interference(sc.readers, f, fading[:R, :R], sc.channel.ref_distance_m)
        g = build_graph(m, interference_threshold_mw(sc)).g
        groups = [[i] for i in range(R)] if sc.sim.tdma_strict else greedy_slots(g)

    leg = rf.path_loss_db(d_rt, f, sc.channel.ref_distance_m) + fading[:R, R:] + sc.channel.tag_link_loss_db
    inc_mw = rf.dbm_to_mw(tx[:, None] + gr[:, None] + gt[None, :] - leg)  # (R, T)
    # conventional tag: strong pair, no filter, reflects every carrier it sees
    refl_db = np.array([20 * math.log10(rf.modulation_strength(*t.profile.strong_pair)) for t in sc.tags])
    floors = np.array([t.profile.detect_floor for t in sc.tags])
    # A conventional tag answers only a reader whose carrier reaches it at
    # least as strongly as at the read-range edge.
    wake_mw = rf.dbm_to_mw(tx[:, None] + gr[:, None] + gt[None, :] - sc.channel.tag_link_loss_db
                           - rf.path_loss_db(sc.sim.read_range_m, f, sc.channel.ref_distance_m))
    G = len(groups)
    excited = np.zeros((G, T), bool)
    rx_g = np.zeros((G, T, R))
    for gi, grp in enumerate(groups):
        carrier = inc_mw[grp].sum(axis=0)  # (T,)
        excited[gi] = np.any(inc_mw[grp] >= wake_mw[grp], axis=0) & (rf.mw_to_dbm(inc_mw[grp].max(axis=0)) >= floors)
        back_dbm = rf.mw_to_dbm(carrier)[:, None] + refl_db[:, None] + gt[:, None] + gr[None, :] - leg.T
        rx_g[gi] = np.where(excited[gi][:, None], rf.dbm_to_mw(back_dbm), 0.0)

    starts = packet_starts(sc, T)
    tau, slot = sc.traffic.packet_duration_s, sc.sim.slot_s
    offered = np.array([len(s) for s in starts])
    src = np.concatenate([np.full(len(s), t) for t, s in enumerate(starts)]) if T else np.zeros(0, int)
    start = np.concatenate(starts) if T else np.zeros(0)
    slot_idx = np.floor(start / slot).astype(np.int64)
    grp_idx = slot_idx % G
    on_air = excited[grp_idx, src]
    src, start, slot_idx, grp_idx = src[on_air], start[on_air], slot_idx[on_air], grp_idx[on_air]
    # a lone slot group never hands the channel over, so slots do not cut packets
    slot_end = (slot_idx + 1) * slot if G > 1 else np.full(len(start), np.inf)
    end = np.minimum(start + tau, slot_end)
    complete = start + tau <= slot_end + 1e-15

    rx_pkt = rx_g[grp_idx, src]  # (P, R)
    listeners = [list(groups[g]) if c else [] for g, c in zip(grp_idx, complete)]
    ok, where = _decode(start, end, listeners, rx_pkt, rf.dbm_to_mw(sc.sim.noise_floor_dbm),
                        10 ** (sc.sim.capture_threshold_db / 10))

    delivered = np.bincount(src[ok], minlength=T)
    full = np.bincount(src[complete], minlength=T)
    bits = np.bincount(where[ok], minlength=R) * sc.traffic.packet_bits
    energy = np.zeros(R)
    for j in range(R):
        listening = np.isin(grp_idx, [g for g, grp in enumerate(groups) if j in grp])
        foreign = listening & (where != j)
        energy[j] = (rx_pkt[foreign, j] * (end[foreign] - start[foreign])).sum()
    home = np.argmax(inc_mw, axis=0) if R else np.zeros(T, np.int64)
    return SimResult("tdma", [r.id for r in sc.readers], [t.id for t in sc.tags],
                     bits / sc.sim.duration_s, offered, delivered, full - delivered,
                     offered - full, energy, home, np.bincount(where[ok], minlength=R), None, None, groups)


def run(sc: Scenario) -> SimResult:
    sc.validate()
    fading = _fading_snapshot(sc)
    if sc.mode == "trident":
        return _run_trident(sc, fading)
    return _run_tdma(sc, fading)


def _derived_seed(base: int, *key: int) -> int:
    return int(np.random.SeedSequence([base, *key]).generate_state(1, dtype=np.uint64)[0])


def sweep_scenarios(sc: Scenario, parameter: str, values, seeds: str = "derived") -> list[Scenario]:
    """One scenario per value. Tag geometry always comes from the base seed.

    ``seeds="derived"`` gives every value its own simulation seed derived from
    the base seed and the value index; ``seeds="common"`` reuses the base seed
    (common random numbers), which removes arrival noise from trend comparisons.
    """
    if seeds not in ("derived", "common"):
        raise ConfigError("seeds must be 'derived' or 'common'", "sweep.seeds")
    if parameter not in SWEEP_PARAMETERS:
        raise ConfigError(f"unknown sweep parameter {parameter!r}; expected one of {SWEEP_PARAMETERS}",
                          "sweep.parameter")
    out = []
    for i, v in enumerate(values):
        if parameter == "reporting_rate":
            s = sc.with_traffic(reporting_rate_pps=float(v))
        elif parameter == "tag_count":
            s = replace(sc, tags=_tag_pool(sc, int(v)))
        elif parameter == "reader_spacing":
            s = rescale_spacing(sc, float(v))
        else:
            rng = np.random.default_rng(np.random.SeedSequence([sc.seed, _PLACEMENT]))
            s = replace(sc, tags=tuple(place_tags(sc.readers, len(sc.tags), rng, TAG_COVERAGE_M, str(v))))
        out.append(s if seeds == "common" else s.with_sim(seed=_derived_seed(sc.seed, _SWEEP, i)))
    return out


def _tag_pool(sc: Scenario, count: int):
    """The first ``count`` scenario tags, topped up with fresh placements if needed."""
    if count < 0:
        raise ConfigError("tag count must be >= 0", "sweep.values")
    if count <= len(sc.tags):
        return sc.tags[:count]
    rng = np.random.default_rng(np.random.SeedSequence([sc.seed, _PLACEMENT]))
    extra = place_tags(sc.readers, count - len(sc.tags), rng, TAG_COVERAGE_M, prefix="extra")
    return sc.tags + tuple(extra)


def sweep(sc: Scenario, parameter: str, values, seeds: str = "derived") -> list[SimResult]:
    return [run(s) for s in sweep_scenarios(sc, parameter, values, seeds)]


@dataclass(frozen=True)
class AblationRow:
    distance_m: float
    adjuster: bool
    interfered_bps: float
    interfering_bps: float
    interfering_excessive: bool


def ablation_scenario(base: Scenario, distance: float, adjuster: bool, reader_gap: float = 3.0,
                      interfered_range: float = 0.5) -> Scenario:
    """Readers A and B share band 0, ``reader_gap`` apart. The interfered tag sits
    ``interfered_range`` from A on the far side; the interfering tag sits
    ``distance`` from B towards A. Only the interfering tag's adjuster toggles."""
    if distance <= 0:
        raise ConfigError("interferer distance must be positive (m)", "ablation.distances")
    a = Reader("A", (0.0, 0.0), band=0)
    b = Reader("B", (reader_gap, 0.0), band=0)
    prof = base.tags[0].profile if base.tags else TagProfile()
    alpha = Tag("alpha", (-interfered_range, 0.0), profile=prof)
    beta = Tag("beta", (reader_gap - distance, 0.0), profile=replace(prof, power_adjuster=adjuster))
    return replace(base, readers=(a, b), tags=(alpha, beta))


def power_adjuster_ablation(base: Scenario, distances) -> list[AblationRow]:
    rows = []
    for d in distances:
        for on in (False, True):
            sc = ablation_scenario(base, float(d), on)
            res = run(sc)
            bps = res.tag_throughput_bps(sc.traffic.packet_bits, sc.sim.duration_s)
            rows.append(AblationRow(float(d), on, float(bps[0]), float(bps[1]), res.decisions[1].excessive_power))
    return rows


def co_band_interference(m: np.ndarray, assignment) -> float:
    """Total power (mW) readers receive from same-band peers."""
    f = np.asarray(assignment)
    same = f[:, None] == f[None, :]
    np.fill_diagonal(same, False)
    return float((m * same).sum())


def dynamic_run(sc: Scenario, chain: FadingChain, policy: str = "frozen", epochs: int = 1000,
                tau: float = 0.9, ga: GaConfig | None = None) -> np.ndarray:
    """Per-epoch co-band interference under fading.

    Both policies start from the assignment computed on the bootstrap
    measurement. ``reallocate`` compares each epoch's co-band observation with
    the one recorded right after the last assignment and re-runs the genetic
    search when the cosine similarity drops below ``tau``.
    """
    if policy not in ("frozen", "reallocate"):
        raise ConfigError(f"unknown policy {policy!r}; expected 'frozen' or 'reallocate'", "dynamic.policy")
    if epochs < 0:
        raise ConfigError("epochs must be >= 0", "dynamic.epochs")
    if chain.n_nodes != len(sc.readers):
        raise ConfigError("fading chain must cover exactly the readers", "dynamic.chain")
    ga = ga or sc.ga
    f, thr = sc.measurement_frequency, interference_threshold_mw(sc)
    ref = sc.channel.ref_distance_m

    m = measure_interference(sc.readers, f, chain.offsets(), ref)
    assignment = assign_genetic(m, ga, thr).assignment
    v0 = observe_network(m, assignment)
    trace = np.empty(epochs)
    for e in range(epochs):
        chain.step()
        m = measure_interference(sc.readers, f, chain.offsets(), ref)
        if policy == "reallocate":
            new = maybe_reallocate(v0, observe_network(m, assignment), tau, m, replace(ga, seed=ga.seed + e + 1), thr)
            if new is not None:
                assignment = new
                v0 = observe_network(m, assignment)
        trace[e] = co_band_interference(m.m, assignment)
    return trace
