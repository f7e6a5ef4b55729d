import numpy as np
import pytest

from lyricmatch.durations import split_syllable_duration
from lyricmatch.network import (
    LyricPath,
    MatchingNetwork,
    build_network,
    instantiate_for_query,
    load_network,
    save_network,
)
from lyricmatch.score import ParseError, ScorePhrase, Syllable, phonetize


@pytest.fixture(scope="module")
def network(demo_phrases, lexicon, stats_all):
    return build_network(demo_phrases, lexicon, stats_all, seconds_per_unit=0.5)


def test_build_known_phrase_has_twelve_states(network, lexicon):
    path = network.path("demo-001")
    labels = [lab for lab, _ in path.states]
    assert labels == phonetize(["yan", "jian", "de", "hong", "ri"], lexicon)
    assert path.n_states == 12
    assert path.role_type == "dan"


def test_build_state_durations_follow_syllable_splits(network, lexicon, stats_all, demo_phrases):
    path = network.path("demo-002")
    expected = []
    for syl in demo_phrases[1].syllables:
        phones = lexicon[syl.pinyin]
        expected.extend(split_syllable_duration(syl.duration_units * 0.5, phones, stats_all))
    assert [mu for _, mu in path.states] == pytest.approx(expected, rel=1e-12)


def test_build_zero_phrases_errors(lexicon, stats_all):
    with pytest.raises(ValueError, match="zero phrases"):
        build_network([], lexicon, stats_all)


def test_build_oov_error_names_phrase(lexicon, stats_all):
    bad = ScorePhrase("bad-1", "dan", (Syllable("zzz", 1.0),))
    with pytest.raises(ValueError, match="bad-1.*zzz"):
        build_network([bad], lexicon, stats_all)


def test_build_missing_centroid_names_phrase(demo_phrases, lexicon, stats_all):
    from lyricmatch.durations import DurationStats

    thin = DurationStats({"m": 0.1}, {"m": 3})
    with pytest.raises(ValueError, match="demo-00"):
        build_network(demo_phrases, lexicon, thin)


def test_network_rejects_duplicate_ids(network):
    with pytest.raises(ValueError, match="duplicate"):
        MatchingNetwork(network.paths + (network.paths[0],))


def test_state_counts_equal_phonetization_lengths(network, demo_phrases, lexicon):
    for phrase in demo_phrases:
        path = network.path(phrase.phrase_id)
        assert path.n_states == len(phonetize(phrase.pinyin, lexicon))


def test_instantiate_durations_sum_to_query(network, inventory):
    paths, excluded = instantiate_for_query(network, 10.0, 0.1, 0.01, inventory)
    assert not excluded
    assert len(paths) == network.K
    for p in paths:
        assert abs(sum(p.mu_values) - 10.0) < 1e-6


def test_instantiate_invariant_to_seconds_per_unit(demo_phrases, lexicon, stats_all, inventory):
    paths_a, _ = instantiate_for_query(
        build_network(demo_phrases, lexicon, stats_all, seconds_per_unit=0.5),
        6.0, 0.1, 0.01, inventory,
    )
    paths_b, _ = instantiate_for_query(
        build_network(demo_phrases, lexicon, stats_all, seconds_per_unit=2.0),
        6.0, 0.1, 0.01, inventory,
    )
    for a, b in zip(paths_a, paths_b):
        assert a.phrase_id == b.phrase_id
        assert [i for i, _ in a.states] == [i for i, _ in b.states]
        assert a.mu_values == pytest.approx(b.mu_values, abs=1e-9)
        for (_, da), (_, db) in zip(a.states, b.states):
            assert da.M == db.M
            np.testing.assert_allclose(da.pmf, db.pmf, atol=1e-9)


def test_instantiate_single_state_path_takes_full_duration(inventory, stats_all):
    net = MatchingNetwork((LyricPath("solo", "dan", (("a", 0.3),)),))
    paths, _ = instantiate_for_query(net, 2.0, 0.1, 0.01, inventory)
    assert paths[0].mu_values == pytest.approx([2.0])


def test_instantiate_excludes_paths_longer_than_query(network, inventory):
    # demo-001 has 12 states; an 11-frame query cannot host it
    paths, excluded = instantiate_for_query(network, 0.11, 0.1, 0.01, inventory)
    excluded_ids = {x.phrase_id for x in excluded}
    assert "demo-001" in excluded_ids
    for x in excluded:
        assert x.n_frames == 11
        assert "11" in x.reason
    assert {p.phrase_id for p in paths} | excluded_ids == {p.phrase_id for p in network.paths}


def test_instantiate_unknown_phoneme_errors(stats_all):
    from lyricmatch.score import PhonemeInventory

    tiny = PhonemeInventory(("a",))
    net = MatchingNetwork((LyricPath("p", "dan", (("b", 0.3),)),))
    with pytest.raises(ValueError, match="'b'"):
        instantiate_for_query(net, 1.0, 0.1, 0.01, tiny)


def test_network_file_round_trip(tmp_path, network):
    path = tmp_path / "network.tsv"
    save_network(network, path)
    again = load_network(path)
    assert again == network


def test_load_network_rejects_malformed(tmp_path):
    path = tmp_path / "net.tsv"
    path.write_text("only-two-fields\tdan\n")
    with pytest.raises(ParseError):
        load_network(path)
    path.write_text("p1\tbadrole\ta:0.5\n")
    with pytest.raises(ParseError, match="role_type"):
        load_network(path)
