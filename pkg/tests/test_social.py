from collections import Counter

import numpy as np
import pytest

from arzdetect.plant import NoiseSpec
from arzdetect.probes import ProbeVehicle, emit_messages
from arzdetect.social import (CORRUPTIONS, LANDMARK_RADIUS, ClassifierMetrics, Landmark,
                              LandmarkTable, SocialMessage, classify_fsdi, evaluate_classifier,
                              extract_position, generate_corpus, is_relevant, process_message)

LM = LandmarkTable.default()
PAPER_TWEETS = {
    "I'm near Pho 11 Vietnamese Restaurant": "relevant",
    "#Beef #Pho @Pho 11 Vietnamese Restaurant is terrific!": "irrelevant",
    "Last night party at pho 11 was a blast": "irrelevant",
}


def text(payload, label="legit"):
    return SocialMessage(0, 0, 0.0, 0.0, "text", payload, label)


class TestLandmarks:
    def test_unique_names(self):
        with pytest.raises(ValueError, match="unique"):
            LandmarkTable([Landmark("A", 1.0), Landmark("a", 2.0)])

    def test_within_domain(self):
        with pytest.raises(ValueError):
            LandmarkTable([Landmark("A", 1200.0)], L=1000.0)

    def test_lookup(self):
        assert LM.find_in("stuck near the riverside mall").name == "Riverside Mall"
        assert LM.nearest(LM.entries[0].x - 50.0).name == LM.entries[0].name
        assert LandmarkTable([Landmark("A", 0.0)]).nearest(151.0) is None


class TestCorpus:
    def test_all_legit(self):
        assert {m.truth_label for m in generate_corpus(500, 0.0, LM, 1)} == {"legit"}

    def test_deterministic(self):
        a = generate_corpus(1000, 0.5, LM, 9)
        b = generate_corpus(1000, 0.5, LM, 9)
        assert [m.to_json() for m in a] == [m.to_json() for m in b]

    def test_corruptions_uniform(self):
        fakes = [m.category for m in generate_corpus(10_000, 0.5, LM, 3) if m.truth_label == "fake"]
        counts = Counter(fakes)
        assert set(counts) == set(CORRUPTIONS)
        for c in CORRUPTIONS:
            assert abs(counts[c] / len(fakes) - 0.25) <= 0.05 * 0.25

    @pytest.mark.parametrize("kw", [dict(n=0), dict(fake_fraction=1.5)])
    def test_invalid(self, kw):
        args = dict(n=10, fake_fraction=0.5, landmarks=LM, seed=0) | kw
        with pytest.raises(ValueError):
            generate_corpus(**args)

    def test_empty_table(self):
        with pytest.raises(ValueError):
            generate_corpus(10, 0.5, LandmarkTable([]), 0)


class TestFSDI:
    def test_spam_url(self):
        verdict, score = classify_fsdi(text("I'm near Riverside Mall http://bit.ly/x9z2kq"), LM)
        assert verdict == "fake" and score >= 1.0

    def test_bait(self):
        assert classify_fsdi(text("Retweet and donate now, free gift card!"), LM)[0] == "fake"

    def test_unknown_landmark(self):
        assert classify_fsdi(text("I'm near Golden Unicorn Plaza"), LM)[0] == "fake"

    @pytest.mark.parametrize("tweet", sorted(PAPER_TWEETS))
    def test_paper_tweets_are_legit(self, tweet):
        assert classify_fsdi(text(tweet), LM)[0] == "legit"

    def test_gps_passes(self):
        m = SocialMessage(0, 0, 0.0, 0.0, "gps", 5.0)
        assert classify_fsdi(m, LM) == ("legit", 0.0)

    def test_pure_function_of_text(self):
        corpus = generate_corpus(300, 0.5, LM, 4)
        assert [classify_fsdi(m, LM) for m in corpus] == [classify_fsdi(m, LM) for m in corpus]

    def test_corpus_properties(self):
        corpus = generate_corpus(2000, 0.5, LM, 11)
        m = evaluate_classifier(corpus, landmarks=LM)
        assert m.sensitivity >= 0.95
        assert m.accuracy >= 0.85


class TestMetrics:
    def test_identities(self):
        m = ClassifierMetrics(tp=7, fp=2, tn=5, fn=1)
        assert m.accuracy == 12 / 15
        assert m.sensitivity == 7 / 8
        assert m.csv_row().startswith("7,2,5,1,")

    def test_perfect_predictor(self):
        corpus = generate_corpus(200, 0.5, LM, 2)
        m = evaluate_classifier(corpus, [c.truth_label for c in corpus])
        assert (m.accuracy, m.sensitivity) == (1.0, 1.0)

    def test_all_fake_predictor_on_balanced(self):
        corpus = [text("a", "fake"), text("b", "legit")] * 50
        m = evaluate_classifier(corpus, ["fake"] * 100)
        assert (m.accuracy, m.sensitivity) == (0.5, 1.0)

    def test_empty(self):
        with pytest.raises(ValueError):
            evaluate_classifier([])


class TestSSP:
    @pytest.mark.parametrize("tweet, expected", sorted(PAPER_TWEETS.items()))
    def test_paper_relevance(self, tweet, expected):
        assert is_relevant(text(tweet), LM) == expected

    def test_gps_passthrough(self):
        m = SocialMessage(0, 0, 0.0, 0.0, "gps", 432.1)
        assert extract_position(m, LM, 3.0) == (432.1, 3.0)

    def test_landmark_lookup(self):
        table = LandmarkTable([Landmark("Shell Gas Station", 600.0)])
        assert extract_position(text("approaching Shell Gas Station"), table, 0.0) == (600.0, LANDMARK_RADIUS)

    def test_fake_never_positioned(self):
        for m in generate_corpus(2000, 0.5, LM, 5):
            process_message(m, LM, 0.0, 1000.0)
            if m.x_est is not None:
                assert m.fsdi_verdict == "legit" and m.relevance == "relevant"
                assert 0.0 <= m.x_est <= 1000.0
            if m.fsdi_verdict == "fake":
                assert m.x_est is None and m.relevance is None

    def test_end_to_end_position_accuracy(self):
        rng, crng = np.random.default_rng(21), np.random.default_rng(22)
        noise = NoiseSpec()
        good = total = 0
        for k in range(5000):
            veh = ProbeVehicle(k % 8, float(rng.uniform(0, 1000)))
            for m in emit_messages(veh, LM, noise, rng, float(k), k, p_text=0.2,
                                   corrupt_fraction=0.1, corrupt_rng=crng):
                process_message(m, LM, noise.sigma_gps, 1000.0)
                if m.x_est is not None:
                    total += 1
                    good += abs(m.x_est - m.truth_x) <= 2 * m.x_sigma
        assert total > 3000
        assert good / total >= 0.93
