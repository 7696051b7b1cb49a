import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from harsanyi.errors import FormatError, PreconditionError
from harsanyi.game_oracle import tabulate
from harsanyi.interaction_core import harsanyi_dividends
from harsanyi.synthetic import (
    NoisySpec,
    OrSpec,
    ParitySpec,
    PlantedSpec,
    PolynomialSpec,
    analytic_harsanyi,
    game_from_spec,
    load_game_spec,
    mask_noise,
    noisy_game,
    or_game,
    parity_game,
    planted_game,
    polynomial_game,
    random_planted_spec,
    random_polynomial_spec,
    save_game_spec,
    spec_from_document,
    spec_to_document,
)

from oracles import dividend


def effects_of(oracle):
    return harsanyi_dividends(tabulate(oracle)).effects


def test_planted_single_concept():
    I = effects_of(planted_game(PlantedSpec(5, ((0b111, 5.0),))))
    assert I[0b111] == 5.0 and np.count_nonzero(I) == 1


def test_planted_disjoint_concepts_and_empty():
    I = effects_of(planted_game(PlantedSpec(6, ((0b11, 1.5), (0b110000, -0.25)))))
    assert I[0b11] == 1.5 and I[0b110000] == -0.25 and np.count_nonzero(I) == 2
    assert not effects_of(planted_game(PlantedSpec(4, (), baseline_output=3.0))).any()


def test_planted_rejects_empty_mask():
    with pytest.raises(PreconditionError):
        planted_game(PlantedSpec(3, ((0, 1.0),)))


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 10), st.integers(1, 15), st.integers(0, 2**32 - 1))
def test_planted_recovery(n, count, seed):
    rng = np.random.default_rng(seed)
    count = min(count, (1 << n) - 1)
    spec = random_planted_spec(n, count, rng, orders=(1, n))
    I = effects_of(planted_game(spec))
    expected = np.zeros(1 << n)
    for mask, c in spec.concepts:
        expected[mask] = c
    assert np.max(np.abs(I - expected)) <= 1e-12 * max(1.0, sum(abs(c) for _, c in spec.concepts))


def test_polynomial_examples():
    xy = PolynomialSpec(2, (0.0, 0.0), (1.0, 1.0), (((1, 1), 1.0),))
    assert tabulate(polynomial_game(xy)).values.tolist() == [0, 0, 0, 1]
    assert analytic_harsanyi(xy, 0b11) == 1.0 and analytic_harsanyi(xy, 0b01) == 0.0
    assert analytic_harsanyi(xy, 0) == 0.0
    lin = PolynomialSpec(2, (0.0, 0.0), (2.0, 5.0), (((1, 0), 3.0),))
    assert tabulate(polynomial_game(lin)).values.tolist() == [0, 6, 0, 6]
    sq = PolynomialSpec(2, (0.0, 0.0), (1.0, 1.0), (((2, 1), 2.0),))
    assert analytic_harsanyi(sq, 0b11) == pytest.approx(effects_of(polynomial_game(sq))[0b11])
    const = PolynomialSpec(3, (0.1, 0.2, 0.3), (1.0, 1.0, 1.0), (), baseline_output=2.0)
    assert np.all(tabulate(polynomial_game(const)).values == 2.0)


def test_polynomial_degree_cap_enforced():
    with pytest.raises(PreconditionError):
        polynomial_game(PolynomialSpec(2, (0, 0), (1, 1), (((2, 1), 1.0),), max_degree=2))


@pytest.mark.parametrize("n,M", [(4, 1), (6, 3), (8, 4), (10, 4)])
def test_lemma1_and_corollary1(rng, n, M):
    spec = random_polynomial_spec(n, M, 10, rng)
    table = tabulate(polynomial_game(spec))
    I = harsanyi_dividends(table).effects
    scale = table.scale()
    analytic = np.array([analytic_harsanyi(spec, S) for S in range(1 << n)])
    assert np.max(np.abs(analytic - I)) <= 1e-10 * scale
    sizes = np.bitwise_count(np.arange(1 << n))
    assert np.max(np.abs(I[sizes > M]), initial=0.0) <= 1e-10 * scale


def test_parity_tables():
    assert tabulate(parity_game(1)).values.tolist() == [0, 1]
    assert tabulate(parity_game(2)).values.tolist() == [0, 1, 1, -1]


@pytest.mark.parametrize("n", [1, 3, 6, 8])
def test_parity_sign_pattern_brute_force(n):
    u = tabulate(parity_game(n)).values.tolist()
    fast = effects_of(parity_game(n))
    for S in range(1, 1 << n):
        brute = dividend(u, S, n)
        assert fast[S] == brute
        assert (brute > 0) == (bin(S).count("1") % 2 == 1)


def test_or_examples():
    I = effects_of(or_game(3, 0b1, 1.0))
    assert I.tolist() == [0, 1, 0, 0, 0, 0, 0, 0]
    I = effects_of(or_game(3, 0b11, 1.0))
    assert I.tolist() == [0, 1, 1, -1, 0, 0, 0, 0]
    with pytest.raises(PreconditionError):
        or_game(3, 0, 1.0)


@pytest.mark.parametrize("m", [1, 4, 8, 12])
def test_or_closed_form(m):
    n, c = m + 1, 0.75
    members = (1 << m) - 1
    I = effects_of(or_game(n, members, c))
    for S in range(1 << n):
        if S and S & ~members == 0:
            assert I[S] == c * (-1) ** (bin(S).count("1") + 1)
        else:
            assert I[S] == 0
    assert np.count_nonzero(I) == 2**m - 1


def test_noise_zero_sigma_is_inner_game():
    inner = PlantedSpec(6, ((0b101, 1.0),), baseline_output=0.5)
    a = tabulate(noisy_game(inner, 0.0, 3))
    assert a == tabulate(planted_game(inner))


def test_noise_deterministic_and_order_independent():
    inner = ParitySpec(8)
    a = tabulate(noisy_game(inner, 0.1, 42))
    b = tabulate(noisy_game(inner, 0.1, 42))
    assert a.values.tobytes() == b.values.tobytes()
    single = noisy_game(inner, 0.1, 42)
    for S in (255, 0, 17, 128, 3):
        assert single.evaluate(S) == a.values[S]
    assert not np.array_equal(a.values, tabulate(noisy_game(inner, 0.1, 43)).values)


def test_mask_noise_subsets_agree_with_full_range():
    full = mask_noise(9, np.arange(1 << 10))
    picks = np.array([1023, 5, 6, 7, 0, 512])
    np.testing.assert_array_equal(mask_noise(9, picks), full[picks])
    assert mask_noise(9, np.array([], dtype=np.int64)).size == 0


def test_mask_noise_is_standard_normal():
    z = mask_noise(1, np.arange(1 << 16))
    assert abs(z.mean()) < 0.02
    assert abs(z.var() - 1.0) < 0.03
    assert abs(np.mean(np.abs(z) < 1.0) - 0.6827) < 0.01


def test_noise_makes_planted_game_dense():
    I = effects_of(noisy_game(PlantedSpec(10, ((0b111, 1.0),)), 0.01, 5))
    assert np.count_nonzero(np.abs(I) > 1e-6) > 900


def test_noisy_rejects_negative_sigma():
    with pytest.raises(PreconditionError):
        noisy_game(ParitySpec(3), -0.1, 0)


SPECS = [
    PlantedSpec(4, ((0b11, 1.5), (0b1000, -2.0)), 0.25),
    PolynomialSpec(2, (0.0, 0.5), (1.0, -1.0), (((1, 1), 0.5), ((2, 0), -1.0)), 2, 1.0),
    NoisySpec(PlantedSpec(3, ((0b111, 1.0),)), 0.1, 11),
    ParitySpec(5),
    OrSpec(6, 0b111, 2.0, -1.0),
]


@pytest.mark.parametrize("spec", SPECS, ids=lambda s: s.kind)
def test_spec_round_trip(tmp_path, spec):
    path = tmp_path / "gs.json"
    save_game_spec(spec, path)
    loaded = load_game_spec(path)
    assert loaded == spec
    assert tabulate(game_from_spec(loaded)) == tabulate(game_from_spec(spec))


@pytest.mark.parametrize("doc,needle", [
    ({"format": "harsanyi-gs/1", "n": 3}, "kind"),
    ({"format": "harsanyi-gs/1", "kind": "planted", "n": 3}, "planted"),
    ({"format": "harsanyi-gs/1", "kind": "planted", "n": 3, "planted": [{"mask": 1}]}, "coefficient"),
    ({"format": "harsanyi-gs/1", "kind": "planted", "n": 2, "planted": [{"mask": 9, "coefficient": 1}]}, "mask"),
    ({"format": "harsanyi-gs/1", "kind": "or_game", "n": 3, "payoff": 1}, "members"),
    ({"format": "harsanyi-gs/1", "kind": "noisy", "n": 3, "sigma": 0.1, "seed": 1}, "inner"),
    ({"format": "harsanyi-gs/1", "kind": "bogus", "n": 3}, "kind"),
])
def test_spec_malformed(doc, needle):
    with pytest.raises(FormatError, match=needle):
        spec_from_document(doc)


def test_spec_document_shape():
    doc = spec_to_document(SPECS[0])
    assert doc["planted"] == [{"mask": 3, "coefficient": 1.5}, {"mask": 8, "coefficient": -2.0}]
    assert doc["kind"] == "planted" and doc["format"] == "harsanyi-gs/1"
