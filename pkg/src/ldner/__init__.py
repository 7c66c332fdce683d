"""Gazetteer-free named entity recognition with Local Distance Neighbor features."""
from .corpus import BioTag, Dataset, EntitySpan, Sentence, Token, parse_conll, read_conll
from .embeddings import EmbeddingStore, load_embeddings
from .ldn import LdnConfig, LdnIndex, build_index, ldn_vector
from .trainer import TrainConfig, load_model, predict, save_model, train

__version__ = "0.1.0"
