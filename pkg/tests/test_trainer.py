import numpy as np
import pytest

from ldner.corpus import Sentence, Token
from ldner.crf import is_bio_valid
from ldner.embeddings import EmbeddingStore
from ldner.errors import (ChecksumMismatchError, ConfigError, EmptyIndexError, NotAModelFileError,
                          TruncatedModelError, UnsupportedVersionError)
from ldner.evaluation import score
from ldner.trainer import (FORMAT_VERSION, MAGIC, TrainConfig, dumps_model, load_model, loads_model,
                           parse_config, predict, predict_dataset, save_model, train)


@pytest.fixture(scope="module")
def quick_model(synthetic_corpus, synthetic_store):
    return train(TrainConfig(epochs=40, seed=5), synthetic_corpus, synthetic_store)


def test_config_defaults():
    cfg = TrainConfig()
    assert (cfg.epochs, cfg.learning_rate, cfg.batch_size, cfg.l2, cfg.hidden_dim) == (226, 0.05, 8, 1e-4, 32)
    assert cfg.ldn.x == 5


@pytest.mark.parametrize("kw", [dict(epochs=0), dict(learning_rate=0.0), dict(l2=-1.0),
                                dict(batch_size=0), dict(hidden_dim=-1)])
def test_config_validation(kw):
    with pytest.raises(ConfigError):
        TrainConfig(**kw)


def test_parse_config(tmp_path):
    (tmp_path / "stop.txt").write_text("foo\nbar\n")
    (tmp_path / "tags.txt").write_text("weapon\ndrug\n")
    text = """
    # comment
    epochs = 12
    learning_rate = 0.1
    shuffle = false
    hidden_dim = 0
    x = 3
    include_o_category = no
    prefix_buckets = 16
    stopwords_file = stop.txt
    tagset_file = tags.txt
    """
    cfg, tags = parse_config(text, tmp_path)
    assert cfg.epochs == 12 and cfg.learning_rate == 0.1 and not cfg.shuffle and cfg.hidden_dim == 0
    assert cfg.ldn.x == 3 and not cfg.ldn.include_o_category
    assert cfg.ldn.stopwords == {"foo", "bar"}
    assert cfg.features.prefix_buckets == 16
    assert tags == ("weapon", "drug")


@pytest.mark.parametrize("text", ["bogus = 1", "epochs = 0", "epochs = many", "epochs"])
def test_parse_config_errors(text):
    with pytest.raises(ConfigError):
        parse_config(text)


def test_training_reduces_loss(quick_model):
    assert len(quick_model.losses) == 40
    assert all(np.isfinite(quick_model.losses))
    assert quick_model.losses[-1] < 0.1 * quick_model.losses[0]


def test_convex_case_loss_non_increasing(synthetic_corpus, synthetic_store):
    m = train(TrainConfig(epochs=60, learning_rate=0.01, l2=0.0, hidden_dim=0, seed=1),
              synthetic_corpus, synthetic_store)
    assert np.all(np.diff(m.losses) <= 0)


def test_empty_index_propagates(synthetic_corpus):
    store = EmbeddingStore.from_dict({"qqq": [1.0, 0.0]})
    with pytest.raises(EmptyIndexError):
        train(TrainConfig(epochs=1), synthetic_corpus, store)


def test_predict_contract(quick_model, synthetic_store):
    for words in (["Obama", "visited", "Paris"], ["Zq", "!!", "xyzzy", "Blorp"], ["I"]):
        s = Sentence(tuple(Token(w) for w in words))
        tags = predict(quick_model, synthetic_store, s)
        assert len(tags) == len(words)
        assert is_bio_valid(tags)


def test_checksum_mismatch(quick_model, synthetic_store):
    other = EmbeddingStore(synthetic_store.tokens, synthetic_store.vectors * 2.0)
    s = Sentence((Token("Obama"),))
    with pytest.raises(ChecksumMismatchError):
        predict(quick_model, other, s)
    assert len(predict(quick_model, other, s, force=True)) == 1


def test_overfit_recovers_gold(quick_model, synthetic_corpus, synthetic_store):
    pred = predict_dataset(quick_model, synthetic_store, synthetic_corpus)
    assert score(synthetic_corpus, pred).entity_total.f1 == 1.0


def test_save_load_round_trip(quick_model, synthetic_corpus, synthetic_store, tmp_path):
    path = tmp_path / "m.bin"
    save_model(quick_model, path)
    loaded = load_model(path)
    assert loaded.index == quick_model.index
    assert loaded.losses == quick_model.losses
    assert dumps_model(loaded) == path.read_bytes()
    a = predict_dataset(quick_model, synthetic_store, synthetic_corpus)
    b = predict_dataset(loaded, synthetic_store, synthetic_corpus)
    assert a == b


def test_bad_model_files(quick_model):
    data = dumps_model(quick_model)
    with pytest.raises(NotAModelFileError, match="not a model file"):
        loads_model(b"PK\x03\x04" + data[4:])
    bumped = MAGIC + (FORMAT_VERSION + 1).to_bytes(4, "little") + data[len(MAGIC) + 4:]
    with pytest.raises(UnsupportedVersionError, match="unsupported version"):
        loads_model(bumped)
    for cut in (len(data) - 1, len(data) // 2, len(MAGIC) + 6):
        with pytest.raises(TruncatedModelError):
            loads_model(data[:cut])


def test_same_seed_same_bytes(synthetic_corpus, synthetic_store):
    cfg = TrainConfig(epochs=5, seed=11)
    a = dumps_model(train(cfg, synthetic_corpus, synthetic_store))
    b = dumps_model(train(cfg, synthetic_corpus, synthetic_store))
    c = dumps_model(train(TrainConfig(epochs=5, seed=12), synthetic_corpus, synthetic_store))
    assert a == b and a != c
