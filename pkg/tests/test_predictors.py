import numpy as np
import pytest

from lmgame.corpus import CorpusSplit, split_from_texts
from lmgame.predictors import (
    PROB_FLOOR,
    LookupPredictor,
    UniformPredictor,
    floor_and_normalize,
    ngram_train,
    point_mass,
    predict_distribution,
    predict_top1,
    sample_next,
)
from lmgame.predictors.simple import PredictorDescriptor, build_predictor


def brute_force_ngram_prob(docs, order, k, V, context, token):
    """Independent oracle: add-k suffix counts averaged across orders."""
    total_p = 0.0
    for m in range(order):
        eff = min(m, len(context))
        suffix = tuple(context[len(context) - eff :]) if eff else ()
        count = 0
        total = 0
        for doc in docs:
            for i in range(eff, len(doc)):
                if tuple(doc[i - eff : i]) == suffix:
                    total += 1
                    if doc[i] == token:
                        count += 1
        total_p += (count + k) / (total + k * V)
    return total_p / order


def _token_split(docs):
    return CorpusSplit(name="mini", documents=tuple(tuple(d) for d in docs), source_digest="t")


A, B = 0, 1


class TestNGram:
    def test_unigram_matches_hand_count(self):
        # corpus "a a a b" as token ids
        model = ngram_train(_token_split([[A, A, A, B]]), order=1, smoothing_k=1e-9)
        dist = model.distribution(())
        assert dist.prob(A) == pytest.approx(0.75, abs=1e-6)
        assert dist.prob(B) == pytest.approx(0.25, abs=1e-6)

    def test_large_k_approaches_uniform(self):
        model = ngram_train(_token_split([[A, A, A, B]]), order=1, smoothing_k=1e9)
        dist = model.distribution(())
        v = model.vocab_size
        assert np.allclose(dist.probs, 1.0 / v, atol=1e-6)

    def test_bigram_structure_learned(self):
        # corpus "a b a b a b": after an a, b always follows
        model = ngram_train(_token_split([[A, B, A, B, A, B]]), order=2, smoothing_k=0.1)
        dist = model.distribution((A,))
        assert dist.prob(B) > dist.prob(A)

    def test_matches_brute_force_oracle(self, train_split, vocab):
        model = ngram_train(train_split, order=3, smoothing_k=0.7, vocab_size=len(vocab))
        docs = train_split.documents
        rng = np.random.default_rng(5)
        doc = docs[0]
        for _ in range(4):
            i = int(rng.integers(1, len(doc)))
            context = doc[max(0, i - 6) : i]
            token = int(rng.integers(0, len(vocab)))
            expected = brute_force_ngram_prob(
                docs, 3, 0.7, len(vocab), context, token
            )
            assert model.distribution(context).prob(token) == pytest.approx(
                expected, rel=1e-9
            )

    def test_document_order_invariance(self, toy_texts, tokenizer):
        texts = toy_texts["train"][:10]
        fwd = split_from_texts("f", texts, tokenizer)
        rev = split_from_texts("r", list(reversed(texts)), tokenizer)
        m1 = ngram_train(fwd, order=2, smoothing_k=0.5)
        m2 = ngram_train(rev, order=2, smoothing_k=0.5)
        ctx = fwd.documents[0][:3]
        assert np.array_equal(m1.distribution(ctx).probs, m2.distribution(ctx).probs)

    def test_rejects_bad_parameters(self, train_split):
        with pytest.raises(ValueError):
            ngram_train(train_split, order=0, smoothing_k=1.0)
        with pytest.raises(ValueError):
            ngram_train(train_split, order=1, smoothing_k=0.0)

    def test_save_load_round_trip(self, train_split, vocab, tmp_path):
        model = ngram_train(train_split, order=2, smoothing_k=0.5, vocab_size=len(vocab))
        model.save(tmp_path / "m.json")
        from lmgame.predictors import NGramModel

        again = NGramModel.load(tmp_path / "m.json")
        ctx = train_split.documents[0][:4]
        assert np.array_equal(model.distribution(ctx).probs, again.distribution(ctx).probs)


class TestDistributionContract:
    def test_every_distribution_positive_and_normalized(self, generator, val_split):
        rng = np.random.default_rng(0)
        for _ in range(25):
            doc = val_split.documents[int(rng.integers(len(val_split.documents)))]
            i = int(rng.integers(1, len(doc)))
            dist = predict_distribution(generator, doc[:i])
            assert np.all(dist.probs > 0)
            assert abs(float(dist.probs.sum()) - 1.0) < 1e-9

    def test_floor_applies(self):
        dist = floor_and_normalize([1.0, 0.0, 0.0])
        assert dist.probs.min() >= PROB_FLOOR / 2
        assert np.all(dist.probs > 0)

    def test_context_token_range_checked(self, generator):
        with pytest.raises(ValueError, match="out of range"):
            predict_distribution(generator, [10**9])


class TestSimplePredictors:
    def test_uniform(self):
        p = UniformPredictor(4)
        assert np.allclose(p.distribution(()).probs, 0.25)

    def test_lookup_returns_exact_stored_row(self):
        row = np.array([0.5, 0.25, 0.25])
        p = LookupPredictor(3, {(1,): row})
        stored = p.distribution((1,)).probs
        assert np.array_equal(stored, p.distribution((1,)).probs)
        assert np.allclose(stored, row)

    def test_lookup_missing_context(self):
        p = LookupPredictor(3, {(1,): [0.5, 0.25, 0.25]})
        with pytest.raises(KeyError):
            p.distribution((2,))

    def test_lookup_default_row(self):
        p = LookupPredictor(2, {}, default=[0.9, 0.1])
        assert p.distribution((0,)).prob(0) == pytest.approx(0.9)

    def test_oracle_from_prompts(self, val_split, vocab):
        from lmgame.corpus import sample_prompts

        prompts = sample_prompts(val_split, 10, 120, 0)
        oracle = LookupPredictor.oracle_from_prompts(prompts, len(vocab))
        for p in prompts:
            assert predict_top1(oracle, p.context) == p.true_next


class TestTop1AndSampling:
    def test_argmax(self):
        p = LookupPredictor(3, {(): [0.1, 0.7, 0.2]})
        assert predict_top1(p, ()) == 1

    def test_tie_breaks_toward_lowest_id(self):
        p = LookupPredictor(2, {(): [0.5, 0.5]})
        assert predict_top1(p, ()) == 0

    def test_top1_matches_distribution_argmax(self, generator, val_split):
        doc = val_split.documents[0]
        for i in (1, 5, 9):
            dist = predict_distribution(generator, doc[:i])
            assert predict_top1(generator, doc[:i]) == int(np.argmax(dist.probs))

    def test_point_mass_sampling(self):
        p = LookupPredictor(3, {(): point_mass(2, 3).probs})
        rng = np.random.default_rng(0)
        assert all(sample_next(p, (), rng) == 2 for _ in range(20))

    def test_uniform_sampling_binomial_bound(self):
        p = UniformPredictor(2)
        rng = np.random.default_rng(42)
        draws = [sample_next(p, (), rng) for _ in range(10_000)]
        ones = sum(draws)
        assert abs(ones - 5000) <= 300

    def test_fixed_seed_fixed_samples(self, generator, val_split):
        ctx = val_split.documents[0][:4]
        a = [sample_next(generator, ctx, np.random.default_rng(9)) for _ in range(10)]
        b = [sample_next(generator, ctx, np.random.default_rng(9)) for _ in range(10)]
        assert a == b


class TestDescriptors:
    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError, match="unknown predictor kind"):
            PredictorDescriptor(kind="magic")

    def test_ngram_descriptor_needs_parameters(self):
        with pytest.raises(ValueError, match="order"):
            PredictorDescriptor(kind="ngram")

    def test_build_uniform(self):
        d = PredictorDescriptor(kind="uniform", display_name="u")
        p = build_predictor(d, vocab_size=7)
        assert p.vocab_size == 7 and p.display_name == "u"

    def test_build_ngram_from_split(self, splits, vocab):
        d = PredictorDescriptor(
            kind="ngram", parameters={"order": 2, "smoothing_k": 0.5}
        )
        p = build_predictor(d, vocab_size=len(vocab), splits=splits)
        assert p.order == 2

    def test_build_ngram_from_path(self, train_split, vocab, tmp_path):
        model = ngram_train(train_split, 2, 0.5, len(vocab))
        model.save(tmp_path / "m.json")
        d = PredictorDescriptor(kind="ngram", parameters={"path": "m.json"})
        p = build_predictor(d, vocab_size=len(vocab), base_dir=tmp_path)
        ctx = train_split.documents[0][:3]
        assert np.array_equal(p.distribution(ctx).probs, model.distribution(ctx).probs)
