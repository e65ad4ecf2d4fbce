"""Relay decoder: printed worked examples, step semantics, and oracles."""

import numpy as np
import pytest

from pcdsim import builtin_code
from pcdsim.channel import ChannelState, Constellation, ma_superimpose, modulate
from pcdsim.gf import GfField
from pcdsim.ldpc import bp_decode, encode, encoder_info_length, lift_to_gfq
from pcdsim.mapping import (
    ClusterMap,
    load_catalog,
    toy_decision_map,
    toy_nonlinear_map,
    xor_map,
)
from pcdsim.pcd import (
    build_pcd_tabs,
    check_update,
    decide,
    init_messages,
    pcd_decode,
    symbol_update,
)

A, B, C = 0, 1, 2  # toy three-cluster labels
BPSK = Constellation(2)
M_NL = toy_nonlinear_map()
M_DEC = toy_decision_map()


def toy():
    return builtin_code("toy")


def toy_tabs(ms=None, mh=None):
    h = toy()
    return build_pcd_tabs(h, h, ms or M_NL, mh or M_DEC)


def random_pair_frame(h_a, h_b, ch, rng, q=2):
    """Encode two random words, superimpose them through the channel."""
    ka, kb = encoder_info_length(h_a), encoder_info_length(h_b)
    ca = encode(h_a, rng.integers(0, q, size=ka))
    cb = encode(h_b, rng.integers(0, q, size=kb))
    k = Constellation(q)
    y = ma_superimpose(modulate(ca, k), modulate(cb, k), ch, rng)
    return ca, cb, y


# ---------------------------------------------------------------------------
# initialization


def test_init_worked_example():
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    state = init_messages(np.array([2.0 + 0.0j]), ch, M_NL, BPSK)
    assert state.u_raw[0] == pytest.approx(
        [1.0, 2 * np.exp(-4.0), np.exp(-16.0)], rel=1e-12
    )
    assert state.u[0] == pytest.approx([0.9647, 0.0353, 1.1e-7], abs=5e-5)
    assert state.posterior[0] == pytest.approx(state.u[0])


def test_init_equidistant_observation():
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    state = init_messages(np.array([0.0 + 0.0j]), ch, M_NL, BPSK)
    # the two single-pair clusters see equal evidence; the double-pair
    # cluster collects both zero-distance points and dominates
    assert state.u[0, A] == state.u[0, C]
    assert state.u[0, B] > 0.9


def test_init_is_edge_independent_and_defaults_constellation():
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    y = np.array([2.0, 0.0, -2.0], dtype=complex)
    state = init_messages(y, ch, M_NL)
    assert state.u.shape == (3, 3)
    assert np.allclose(state.u.sum(axis=1), 1.0)


def test_init_noiseless_point_mass_and_off_grid_error():
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.0)
    state = init_messages(np.array([2.0 + 0.0j]), ch, M_NL, BPSK)
    assert state.u[0] == pytest.approx([1.0, 0.0, 0.0], abs=1e-12)
    with pytest.raises(ValueError):
        init_messages(np.array([1.3 + 0.2j]), ch, M_NL, BPSK)


# ---------------------------------------------------------------------------
# check update


def uniform_state(n=6):
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    state = init_messages(np.zeros(n, dtype=complex), ch, M_NL, BPSK)
    state.u_raw[:] = 1.0
    state.u[:] = 1.0 / 3.0
    state.posterior[:] = 1.0 / 3.0
    return state


def test_check_update_uniform_messages():
    tabs = toy_tabs()
    state = uniform_state()
    check_update(state, tabs.decoder_tabs)
    # check row 0 covers symbols (0, 2, 5); with uniform inputs the
    # outgoing vector is the per-target row mass over nine known pairs
    for pos in (0, 2, 5):
        assert state.w[(0, pos)] == pytest.approx([2 / 9, 5 / 9, 2 / 9], abs=1e-12)


def test_check_update_point_mass_follows_generation_rule():
    tabs = toy_tabs()
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.0)
    # noiseless word pair: symbol pairs (0,1) at position 0 and (1,0) at 2
    # put cluster evidence a at position 0 and c at position 2
    y = np.zeros(6, dtype=complex)
    y[0] = 2.0  # pair (0,1) -> cluster a
    y[2] = -2.0  # pair (1,0) -> cluster c
    state = init_messages(y, ch, M_NL, BPSK)
    check_update(state, tabs.decoder_tabs)
    assert state.w[(0, 5)] == pytest.approx([0.0, 1.0, 0.0], abs=1e-12)  # (a,c) -> b


def test_check_update_is_a_probability_vector():
    tabs = toy_tabs()
    rng = np.random.default_rng(5)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    _, _, y = random_pair_frame(toy(), toy(), ch, rng)
    state = init_messages(y, ch, M_NL, BPSK)
    check_update(state, tabs.decoder_tabs)
    for vec in state.w.values():
        assert vec.min() >= 0.0
        assert vec.sum() == pytest.approx(1.0, abs=1e-9)


# ---------------------------------------------------------------------------
# symbol update


def test_symbol_update_exponent_and_normalization():
    tabs = toy_tabs()
    rng = np.random.default_rng(7)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    _, _, y = random_pair_frame(toy(), toy(), ch, rng)
    state = init_messages(y, ch, M_NL, BPSK)
    check_update(state, tabs.decoder_tabs)
    symbol_update(state)
    # every symbol sits in exactly two checks: the outgoing message to one
    # is evidence times the other check's vector with one prior division
    priors = M_NL.priors
    for n in range(6):
        m1, m2 = state.neighbors[n]
        expect = state.u[n] * state.w[(m2, n)] / priors
        expect = expect / expect.sum()
        assert state.t[(n, m1)] == pytest.approx(expect, rel=1e-12)
        assert state.posterior[n].sum() == pytest.approx(1.0, abs=1e-9)
        assert state.t[(n, m2)].min() >= 0.0


def test_symbol_update_single_check_has_no_prior_correction():
    from pcdsim.ldpc import ParityCheckMatrix

    h = ParityCheckMatrix(1, 2, [(0, 0, 1), (0, 1, 1)], GfField(2))
    tabs = build_pcd_tabs(h, h, M_NL, M_DEC)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    state = init_messages(np.array([1.0, -1.0], dtype=complex), ch, M_NL, BPSK)
    check_update(state, tabs.decoder_tabs)
    symbol_update(state)
    for n in range(2):
        assert state.t[(n, 0)] == pytest.approx(state.u[n], rel=1e-12)


# ---------------------------------------------------------------------------
# decision


def test_decide_merges_fine_classes():
    tabs = toy_tabs()
    state = uniform_state()
    state.posterior[:] = np.array([0.6, 0.3, 0.1])  # a, b, c
    hard, _ = decide(state, tabs)
    # coarse class 0 collects b (0.3); class 1 collects a + c (0.7)
    assert hard.tolist() == [1] * 6


def test_decide_tie_breaks_to_lowest_class():
    tabs = toy_tabs()
    state = uniform_state()
    state.posterior[:] = np.array([0.25, 0.5, 0.25])
    hard, _ = decide(state, tabs)
    assert hard.tolist() == [0] * 6


def test_decide_satisfaction_matches_tab_membership():
    tabs = toy_tabs()
    state = uniform_state()
    # codeword-consistent coarse word: the decision map of a codeword pair
    ca = encode(toy(), [1, 0, 1])
    cb = encode(toy(), [0, 1, 1])
    word = M_DEC(ca, cb)
    state.posterior[:] = 0.0
    fine = M_NL(ca, cb)
    state.posterior[np.arange(6), fine] = 1.0
    hard, satisfied = decide(state, tabs)
    assert np.array_equal(hard, word)
    assert satisfied
    # corrupt one symbol toward the other coarse class: some check's
    # tuple must leave its reachable set
    state.posterior[0] = [0.0, 1.0, 0.0] if word[0] == 1 else [1.0, 0.0, 0.0]
    _, satisfied = decide(state, tabs)
    assert not satisfied


def test_catalog_merger_composition():
    cat = load_catalog()
    s4, h2 = cat.pair(4)
    merge = s4.merge_into(h2)
    target = int(h2.table[2])  # coarse class holding pair (a=0, b=2)
    assert sorted(np.flatnonzero(merge == target).tolist()) == [2, 4, 9, 10]


# ---------------------------------------------------------------------------
# full decode


def test_noiseless_frames_converge_without_iterations():
    h = toy()
    tabs = toy_tabs()
    rng = np.random.default_rng(11)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.0)
    for _ in range(20):
        ca, cb, y = random_pair_frame(h, h, ch, rng)
        for backend in ("reference", "numpy"):
            hard, converged, iters = pcd_decode(
                y, ch, M_NL, M_DEC, tabs, max_iter=30, backend=backend
            )
            assert converged and iters == 0
            assert np.array_equal(hard, M_DEC(ca, cb))


def test_reference_and_kernel_backends_agree_binary():
    h = toy()
    tabs = toy_tabs()
    rng = np.random.default_rng(13)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.6)
    for _ in range(60):
        _, _, y = random_pair_frame(h, h, ch, rng)
        ref = pcd_decode(y, ch, M_NL, M_DEC, tabs, max_iter=20, backend="reference")
        fast = pcd_decode(y, ch, M_NL, M_DEC, tabs, max_iter=20, backend="numpy")
        assert np.array_equal(ref[0], fast[0])
        assert ref[1:] == fast[1:]


def test_reference_and_kernel_backends_agree_gf4():
    f4 = GfField(4)
    h_a = lift_to_gfq(toy(), 2, f4)
    h_b = lift_to_gfq(toy(), 3, f4)
    cat = load_catalog()
    cases = [(cat.soft[0], cat.hard[0]), (cat.pair(4))]
    rng = np.random.default_rng(17)
    ch = ChannelState(h_ac=1.0, h_bc=0.5 + 0.5j, sigma2=0.3)
    for ms, mh in cases:
        tabs = build_pcd_tabs(h_a, h_b, ms, mh)
        for _ in range(25):
            _, _, y = random_pair_frame(h_a, h_b, ch, rng, q=4)
            ref = pcd_decode(y, ch, ms, mh, tabs, max_iter=15, backend="reference")
            fast = pcd_decode(y, ch, ms, mh, tabs, max_iter=15, backend="numpy")
            assert np.array_equal(ref[0], fast[0])
            assert ref[1:] == fast[1:]


def test_pcd_equals_bp_with_xor_and_identical_codes():
    h = toy()
    x2 = xor_map(2)
    tabs = build_pcd_tabs(h, h, x2, x2)
    rng = np.random.default_rng(19)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    for _ in range(100):
        ca, cb, y = random_pair_frame(h, h, ch, rng)
        state = init_messages(y, ch, x2, BPSK)
        pcd = pcd_decode(y, ch, x2, x2, tabs, max_iter=25, backend="numpy")
        bp = bp_decode(h, state.u, max_iter=25)
        assert np.array_equal(pcd[0], bp[0])
        assert pcd[1] == bp[1]
        assert pcd[2] == bp[2]


def brute_force_map_oracle(y, ch, mh, h_a, h_b, constellation):
    """Posterior argmax over the image of all codeword pairs."""
    from pcdsim.channel import pair_likelihoods

    like = pair_likelihoods(y, ch, constellation)
    q = constellation.q
    ka, kb = encoder_info_length(h_a), encoder_info_length(h_b)
    words = {}
    for ia in range(q**ka):
        ca = encode(h_a, [(ia // q**j) % q for j in range(ka)])
        for ib in range(q**kb):
            cb = encode(h_b, [(ib // q**j) % q for j in range(kb)])
            w = tuple(mh(ca, cb).tolist())
            lp = float(np.log(like[np.arange(len(ca)), q * ca + cb] + 1e-300).sum())
            words[w] = np.logaddexp(words.get(w, -np.inf), lp)
    return max(words, key=words.get)


def test_matches_brute_force_map_oracle():
    h = toy()
    tabs = toy_tabs()
    rng = np.random.default_rng(23)
    from pcdsim.channel import snr_to_sigma2

    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=snr_to_sigma2(6.0, 0.5))
    hits = 0
    trials = 200
    for _ in range(trials):
        _, _, y = random_pair_frame(h, h, ch, rng)
        hard, _, _ = pcd_decode(y, ch, M_NL, M_DEC, tabs, max_iter=30)
        oracle = brute_force_map_oracle(y, ch, M_DEC, h, h, BPSK)
        hits += int(tuple(hard.tolist()) == oracle)
    assert hits >= 0.99 * trials


def test_monotone_iteration_benefit():
    h = toy()
    tabs = toy_tabs()
    from pcdsim.channel import snr_to_sigma2

    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=snr_to_sigma2(3.0, 0.5))
    errors = {}
    for cap in (2, 30):
        rng = np.random.default_rng(29)  # common randomness
        wrong = 0
        for _ in range(400):
            ca, cb, y = random_pair_frame(h, h, ch, rng)
            hard, _, _ = pcd_decode(y, ch, M_NL, M_DEC, tabs, max_iter=cap)
            wrong += int(np.count_nonzero(hard != M_DEC(ca, cb)))
        errors[cap] = wrong
    assert errors[30] <= errors[2]


def test_converged_words_satisfy_every_check_tab():
    h = toy()
    tabs = toy_tabs()
    rng = np.random.default_rng(31)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.7)
    seen = 0
    for _ in range(100):
        _, _, y = random_pair_frame(h, h, ch, rng)
        hard, converged, _ = pcd_decode(y, ch, M_NL, M_DEC, tabs, max_iter=10)
        if converged:
            seen += 1
            for i, allowed in enumerate(tabs.hard_tuples):
                assert tuple(hard[tabs.h_a.row_cols[i]].tolist()) in allowed
    assert seen > 50


def test_trace_collects_entropy_per_iteration():
    h = toy()
    tabs = toy_tabs()
    rng = np.random.default_rng(37)
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=1.5)
    _, _, y = random_pair_frame(h, h, ch, rng)
    trace = []
    _, _, iters = pcd_decode(
        y, ch, M_NL, M_DEC, tabs, max_iter=5, backend="reference", trace=trace
    )
    assert [entry[0] for entry in trace] == list(range(len(trace)))
    assert len(trace) >= iters
    for _, ent in trace:
        assert ent.shape == (6,)
        assert np.all(ent >= 0.0)


# ---------------------------------------------------------------------------
# validation


def test_tab_bundle_rejects_bad_maps():
    h = toy()
    with pytest.raises(ValueError, match="exclusive law"):
        build_pcd_tabs(h, h, ClusterMap(2, [0, 1, 0, 1]), M_DEC)
    with pytest.raises(ValueError, match="not contained"):
        build_pcd_tabs(h, h, xor_map(2), ClusterMap(2, [0, 1, 2, 3]))
    with pytest.raises(ValueError, match="field order"):
        build_pcd_tabs(h, h, xor_map(4), xor_map(4))


def test_decode_rejects_mismatched_maps():
    tabs = toy_tabs()
    ch = ChannelState(h_ac=1.0, h_bc=-1.0, sigma2=0.5)
    y = np.zeros(6, dtype=complex)
    with pytest.raises(ValueError, match="iteration map"):
        pcd_decode(y, ch, xor_map(2), M_DEC, tabs, max_iter=5)
    with pytest.raises(ValueError, match="decision map"):
        pcd_decode(y, ch, M_NL, ClusterMap(2, [1, 0, 2, 3]), tabs, max_iter=5)
