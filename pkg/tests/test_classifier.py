import json
import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from skilltrace.classifier import (
    BalanceConfig, ClassifierEnsemble, TrainingConfig, balance, cross_validate, fit_vectorizer,
    load_ensemble, modified_huber_dloss, modified_huber_loss, predict, save_ensemble, tokenize,
    train_binary, train_ensemble, vectorize,
)
from skilltrace.classifier.evaluation import binary_scores, stratified_folds
from skilltrace.classifier.features import idf_weight, vectorize_many
from skilltrace.classifier.linear import DEFAULT_ALPHA, _sgd
from skilltrace.classifier.sampling import target_sizes
from skilltrace.corpus import ALL_CLASSES, LabeledSentence, PermissionClass as P
from skilltrace.errors import EmptyCorpusError, ModelFormatError, TrainingError, VersionMismatchError


@pytest.mark.parametrize("sentence,tokens", [
    ("we collect your email address.", ["we", "collect", "your", "email", "address"]),
    ("", []),
    ("e-mail isn't stored", ["e-mail", "isn't", "stored"]),
    ("'quoted' (paren) 24/7 -dash-", ["quoted", "paren", "247", "dash"]),
])
def test_tokenize(sentence, tokens):
    assert tokenize(sentence) == tokens


def test_fit_vectorizer_examples(caplog):
    with caplog.at_level("WARNING"):
        m = fit_vectorizer(["a b"])
    assert m.size == 0 and "degenerate" in caplog.text
    m = fit_vectorizer(["a b", "a b"])
    assert set(m.vocabulary) == {"a", "b", "a b"}
    assert np.allclose(m.idf, 1.0)
    assert idf_weight(10, 10) == 1.0
    with pytest.raises(EmptyCorpusError):
        fit_vectorizer([])


def test_vectorize_examples():
    m = fit_vectorizer(["email address", "email address", "postal code", "postal code"])
    assert vectorize("zzz qqq", m).indices.size == 0
    one = vectorize("email", m)
    assert one.indices.size == 1 and one.values[0] == pytest.approx(1.0)
    assert np.array_equal(vectorize("email email", m).values, one.values)


def test_vectorizer_matches_sklearn_oracle():
    sk = pytest.importorskip("sklearn.feature_extraction.text")
    docs = ["we collect your email address", "we collect your name", "your email is safe",
            "we store your postal code", "cookies are used", "we collect cookies", "email us"]
    ours = fit_vectorizer(docs)
    ref = sk.TfidfVectorizer(tokenizer=tokenize, token_pattern=None, lowercase=False,
                             ngram_range=(1, 3), min_df=2, binary=True, smooth_idf=True, norm="l2")
    ref_matrix = ref.fit_transform(docs).toarray()
    assert sorted(ours.vocabulary) == sorted(ref.vocabulary_)
    for i, d in enumerate(docs):
        dense = vectorize(d, ours).to_dense(ours.size)
        expected = np.zeros(ours.size)
        for g, j in ref.vocabulary_.items():
            expected[ours.vocabulary[g]] = ref_matrix[i, j]
        assert np.allclose(dense, expected, atol=1e-12)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from(["we", "collect", "email", "name", "your", "cookies"]), max_size=8))
def test_vectors_unit_or_zero(words):
    m = fit_vectorizer(["we collect your email", "we collect your name", "cookies we collect your email"])
    n = vectorize(" ".join(words), m).norm()
    assert n == 0.0 or n == pytest.approx(1.0)


def test_vectorize_many_matches_single():
    m = fit_vectorizer(["a b c", "a b c", "b c d", "b c d"])
    texts = ["a b", "zzz", "b c d", ""]
    indptr, indices, data = vectorize_many(texts, m)
    for i, t in enumerate(texts):
        v = vectorize(t, m)
        assert np.array_equal(indices[indptr[i]:indptr[i + 1]], v.indices)


def test_modified_huber_values():
    assert modified_huber_loss(1, 1.0) == 0
    assert modified_huber_loss(1, 0.0) == 1
    assert modified_huber_loss(1, -2.0) == 8
    # both branches give 4 at yf = -1
    assert modified_huber_loss(1, -1.0) == 4
    assert -4.0 * (-1.0 - 1e-12) == pytest.approx(4.0)
    assert modified_huber_dloss(1, 2.0) == 0
    assert modified_huber_dloss(-1, 0.0) == 2


def _reference_sgd(rows, y, n_features, alpha, orders):
    """Plain dense SGD without the weight-scale trick."""
    w = np.zeros(n_features)
    b = 0.0
    t = 0
    t0 = 1.0 / alpha
    for order in orders:
        for i in order:
            eta = 1.0 / (alpha * (t + t0))
            x = rows[i]
            g = float(modified_huber_dloss(y[i], w @ x + b))
            w = w - eta * (g * x + 2 * alpha * w)
            b = b - eta * g
            t += 1
    return w, b


def test_sgd_kernel_matches_dense_reference():
    rng = np.random.default_rng(3)
    n, d = 30, 12
    dense = rng.random((n, d)) * (rng.random((n, d)) < 0.4)
    y = np.where(rng.random(n) < 0.5, 1.0, -1.0)
    indptr = np.concatenate([[0], np.cumsum((dense != 0).sum(1))]).astype(np.int64)
    indices = np.concatenate([np.nonzero(r)[0] for r in dense]).astype(np.int64)
    data = np.concatenate([r[r != 0] for r in dense])
    orders = np.stack([rng.permutation(n) for _ in range(3)]).astype(np.int64)
    for alpha in (1e-2, 1e-4):
        w, b = _sgd(indptr, indices, data, y, d, alpha, 1.0 / alpha, orders)
        w_ref, b_ref = _reference_sgd(dense, y, d, alpha, orders)
        assert np.allclose(w, w_ref, rtol=1e-9, atol=1e-12)
        assert b == pytest.approx(b_ref, rel=1e-9)


def test_train_binary_separable_and_single_class():
    cfg = TrainingConfig(epochs=5)
    matrix = (np.array([0, 1, 2]), np.array([0, 1]), np.array([1.0, 1.0]))
    model = train_binary(P.NAME, matrix, [1, -1], 2, cfg, np.random.default_rng(0))
    assert model.weights[0] + model.bias > 0 > model.weights[1] + model.bias
    with pytest.raises(TrainingError):
        train_binary(P.NAME, matrix, [1, 1], 2, cfg, np.random.default_rng(0))


def test_training_config_validation():
    assert TrainingConfig().alpha == DEFAULT_ALPHA == 1e-5
    with pytest.raises(ValueError):
        TrainingConfig(alpha=0)
    with pytest.raises(ValueError):
        TrainingConfig(epochs=0)


def _toy(n_pos, strata_sizes):
    pos = [LabeledSentence(f"pay {i}", {P.AMAZON_PAY}) for i in range(n_pos)]
    neg = []
    for k, size in enumerate(strata_sizes):
        cls = ALL_CLASSES[k + 1]
        neg += [LabeledSentence(f"other {k} {i}", {cls}) for i in range(size)]
    return pos + neg


def test_balance_already_balanced():
    corpus = _toy(100, [50, 50])
    out = balance(corpus, P.AMAZON_PAY, BalanceConfig(), np.random.default_rng(1))
    assert sum(1 for _, y in out if y > 0) == 100
    assert sum(1 for _, y in out if y < 0) == 100


def test_balance_rare_class_sizes():
    # 135 positives against 10,274 others
    assert target_sizes(135, 10274, BalanceConfig()) == (667, 1334)
    assert target_sizes(135, 10274, BalanceConfig(min_size=0)) == (135, 270)
    corpus = _toy(135, [1274, 3000, 3000, 3000])
    out = balance(corpus, P.AMAZON_PAY, BalanceConfig(), np.random.default_rng(2))
    pos = [t for t, y in out if y > 0]
    neg = [t for t, y in out if y < 0]
    assert len(pos) == 667 and len(neg) == 1334
    assert 1 <= len(neg) / len(pos) <= 2
    assert {t.split()[1] for t in neg} == {"0", "1", "2", "3"}
    assert 2000 <= len(out) <= 8000


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 3000), st.integers(1, 20000))
def test_target_sizes_ratio_and_bounds(n_pos, n_neg):
    cfg = BalanceConfig()
    pos, neg = target_sizes(n_pos, n_neg, cfg)
    assert pos + neg <= cfg.max_size
    if n_neg >= n_pos and pos + neg < cfg.max_size:
        assert pos <= neg <= 2 * pos


def test_balance_deterministic_and_needs_positives():
    corpus = _toy(30, [100, 100])
    a = balance(corpus, P.AMAZON_PAY, BalanceConfig(), np.random.default_rng(5))
    b = balance(corpus, P.AMAZON_PAY, BalanceConfig(), np.random.default_rng(5))
    assert a == b
    with pytest.raises(TrainingError, match="Name"):
        balance([s for s in corpus if P.NAME not in s.labels], P.NAME, BalanceConfig(),
                np.random.default_rng(0))


def test_binary_scores():
    t = np.array([True, False, True, False])
    p = np.array([True, True, False, False])
    f1, acc = binary_scores(t, p)
    assert f1 == pytest.approx(0.5) and acc == pytest.approx(0.5)
    assert binary_scores(np.zeros(3, bool), np.zeros(3, bool)) == (1.0, 1.0)


def test_stratified_folds_partition(synthetic):
    folds = stratified_folds(synthetic, 5, np.random.default_rng(0))
    flat = sorted(i for f in folds for i in f)
    assert flat == list(range(len(synthetic)))
    sizes = [len(f) for f in folds]
    assert max(sizes) - min(sizes) <= 9


def test_cross_validate_errors():
    same = [LabeledSentence("same sentence here", {P.NAME})] * 10
    with pytest.raises(TrainingError):
        cross_validate(same)
    tiny = [LabeledSentence(f"s {c} {i}", {c}) for c in ALL_CLASSES for i in range(2)]
    with pytest.raises(TrainingError, match="smaller k"):
        cross_validate(tiny, k=5)


def test_train_ensemble_names_missing_class(synthetic):
    without = [s for s in synthetic if P.MOBILE_NUMBER not in s.labels]
    with pytest.raises(TrainingError, match="MobileNumber"):
        train_ensemble(without)


def test_ensemble_structure(ensemble):
    assert set(ensemble.models) == set(ALL_CLASSES)
    for m in ensemble.models.values():
        assert m.weights.shape == (ensemble.vectorizer.size,)


def test_predict_examples(ensemble):
    assert predict("we collect your name and postal address", ensemble) == {P.NAME, P.DEVICE_COUNTRY_POSTAL_CODE}
    empty = predict("qqq zzz", ensemble)
    biases = {c for c, m in ensemble.models.items() if m.bias > 0}
    assert empty == biases


def test_training_deterministic(synthetic, ensemble, tmp_path):
    again = train_ensemble(synthetic, workers=1)
    for c in ALL_CLASSES:
        assert np.array_equal(again.models[c].weights, ensemble.models[c].weights)
        assert again.models[c].bias == ensemble.models[c].bias


def test_one_vs_all_removal(ensemble, synthetic):
    partial = ensemble.without(P.EMAIL_ADDRESS)
    for s in synthetic[::400]:
        assert partial.predict(s.text) == ensemble.predict(s.text) - {P.EMAIL_ADDRESS}


def test_save_load_round_trip(ensemble, tmp_path, synthetic):
    path = tmp_path / "m.json"
    save_ensemble(ensemble, path)
    loaded = load_ensemble(path)
    for c in ALL_CLASSES:
        assert np.array_equal(loaded.models[c].weights, ensemble.models[c].weights)
        assert loaded.models[c].bias == ensemble.models[c].bias
    rng = np.random.default_rng(0)
    words = sorted({w for s in synthetic[:500] for w in s.text.split()})
    for _ in range(1000):
        sent = " ".join(rng.choice(words, size=int(rng.integers(1, 12))))
        assert loaded.predict(sent) == ensemble.predict(sent)
    path2 = tmp_path / "m2.json"
    save_ensemble(loaded, path2)
    assert path.read_bytes() == path2.read_bytes()


def test_load_errors(ensemble, tmp_path):
    path = tmp_path / "m.json"
    save_ensemble(ensemble, path)
    raw = path.read_text()
    trunc = tmp_path / "t.json"
    trunc.write_text(raw[: len(raw) // 2])
    with pytest.raises(ModelFormatError):
        load_ensemble(trunc)
    doc = json.loads(raw)
    doc["version"] = 99
    wrong = tmp_path / "v.json"
    wrong.write_text(json.dumps(doc))
    with pytest.raises(VersionMismatchError):
        load_ensemble(wrong)
    doc["version"] = 1
    doc["models"] = doc["models"][:8]
    short = tmp_path / "s.json"
    short.write_text(json.dumps(doc))
    with pytest.raises(ModelFormatError):
        load_ensemble(short)


def test_ensemble_rejects_wrong_dimensions(ensemble):
    models = dict(ensemble.models)
    models.pop(P.NONE)
    with pytest.raises(ValueError):
        ClassifierEnsemble(ensemble.vectorizer, models)
