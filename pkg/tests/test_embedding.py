import numpy as np
import pytest

from vulnpipe.embedding import (
    EmptyCorpus,
    build_corpus,
    cosine,
    gadget_tokens,
    load_model,
    save_model,
    train_skipgram,
    vectorize,
)

from conftest import gadget_from_source


def _toy_model(dim=50, **kw):
    corpus = [["alpha", "beta", "gamma", "alpha", "beta"]] * 4
    return train_skipgram(corpus, window=2, dimension=dim, epochs=2, seed=3, **kw)


def test_build_corpus_concatenates_statements():
    gadget = gadget_from_source(
        "void f()\n{\nint n = 1;\nstrcpy(d, n);\n}\n", "strcpy"
    )
    corpus = build_corpus([gadget])
    assert len(corpus) == 1
    assert corpus[0] == gadget_tokens(gadget)
    assert corpus[0][:3] == ["int", "n", "="]
    total = sum(len(s.tokens) for s in gadget.statements)
    assert len(corpus[0]) == total


def test_build_corpus_empty():
    assert build_corpus([]) == []


def test_empty_corpus_raises():
    with pytest.raises(EmptyCorpus):
        train_skipgram([])
    with pytest.raises(EmptyCorpus):
        train_skipgram([[]])


def test_all_vectors_have_dimension_50():
    model = _toy_model()
    assert model.vectors.shape[1] == 50
    assert model.dimension == 50


def test_cooccurrence_drives_similarity():
    rng = np.random.default_rng(0)
    corpus = []
    for _ in range(300):
        corpus.append(["A", "B", str(rng.integers(10, 20))])
        corpus.append(["C", str(rng.integers(20, 30))])
    model = train_skipgram(corpus, window=2, dimension=20, epochs=10, seed=5)
    assert cosine(model, "A", "B") > cosine(model, "A", "C")


def test_seed_determinism():
    m1 = _toy_model()
    m2 = _toy_model()
    assert np.array_equal(m1.vectors, m2.vectors)
    assert m1.vocabulary == m2.vocabulary


def test_different_seeds_differ():
    corpus = [["a", "b", "c"]] * 3
    m1 = train_skipgram(corpus, window=2, dimension=10, epochs=1, seed=1)
    m2 = train_skipgram(corpus, window=2, dimension=10, epochs=1, seed=2)
    assert not np.array_equal(m1.vectors, m2.vectors)


def test_min_count_filters_vocabulary():
    corpus = [["common", "common", "rare"]]
    model = train_skipgram(corpus, window=2, dimension=8, epochs=1, min_count=2, seed=1)
    assert "common" in model.vocabulary
    assert "rare" not in model.vocabulary
    assert np.array_equal(model.vector("rare"), np.zeros(8))


def test_vectorize_pads_with_zeros():
    model = _toy_model(dim=50)
    mat = vectorize(["alpha", "beta", "gamma"], model, tau=5)
    assert mat.shape == (5, 50)
    assert mat.dtype == np.float32
    assert np.array_equal(mat[3], np.zeros(50, dtype=np.float32))
    assert np.array_equal(mat[4], np.zeros(50, dtype=np.float32))
    assert not np.array_equal(mat[0], np.zeros(50, dtype=np.float32))


def test_vectorize_truncates_tail():
    model = _toy_model(dim=50)
    tokens = ["alpha", "beta", "gamma", "alpha", "beta", "gamma", "alpha"]
    mat = vectorize(tokens, model, tau=5)
    assert mat.shape == (5, 50)
    for i, tok in enumerate(tokens[:5]):
        assert np.allclose(mat[i], model.vector(tok).astype(np.float32))


def test_vectorize_empty_sequence():
    model = _toy_model(dim=50)
    mat = vectorize([], model, tau=5)
    assert mat.shape == (5, 50)
    assert not mat.any()


def test_vectorize_oov_is_zero_row():
    model = _toy_model(dim=50)
    mat = vectorize(["nosuchtoken", "alpha"], model, tau=3)
    assert not mat[0].any()
    assert mat[1].any()


def test_vectorize_rejects_bad_tau():
    model = _toy_model(dim=10)
    with pytest.raises(ValueError):
        vectorize(["alpha"], model, tau=0)


def test_model_file_round_trip(tmp_path):
    corpus = [["int", "varb_0", "=", '"a b"', ";"]] * 3
    model = train_skipgram(corpus, window=2, dimension=12, epochs=1, seed=9)
    path = tmp_path / "model.txt"
    save_model(model, path)
    loaded = load_model(path)
    assert loaded.vocabulary == model.vocabulary
    assert loaded.window == model.window
    assert loaded.seed == model.seed
    assert np.array_equal(loaded.vectors, model.vectors)
    assert '"a b"' in loaded.vocabulary  # tokens containing spaces survive
