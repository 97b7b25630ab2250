"""Pretrained word-vector tables and entity-name similarity."""

import logging
import re

import numpy as np

from .errors import ParseError

logger = logging.getLogger(__name__)

_CAMEL_BOUNDARY = re.compile(r"(?<=[a-z0-9])(?=[A-Z])")


class WordVectorTable:
    """Token -> unit-norm vector map with a fixed dimension.

    Vectors are L2-normalized on insertion so dot products of stored
    vectors are cosine similarities.
    """

    def __init__(self, dim: int):
        self.dim = int(dim)
        self._vectors = {}

    def add(self, token: str, vector) -> None:
        v = np.asarray(vector, dtype=np.float64)
        if v.shape != (self.dim,):
            raise ParseError(f"vector for {token!r} has dimension {v.shape}, "
                             f"expected ({self.dim},)")
        norm = np.linalg.norm(v)
        if norm == 0.0:
            raise ParseError(f"vector for {token!r} has zero norm")
        if token in self._vectors:
            logger.warning("duplicate token %r: keeping the later vector", token)
        self._vectors[token] = v / norm

    def get(self, token: str):
        return self._vectors.get(token)

    def __contains__(self, token) -> bool:
        return token in self._vectors

    def __len__(self) -> int:
        return len(self._vectors)

    def tokens(self):
        return list(self._vectors)

    def __repr__(self) -> str:
        return f"WordVectorTable({len(self)} tokens, dim={self.dim})"


def load_word_vectors(path) -> WordVectorTable:
    """Read a whitespace-separated text dump: ``token v1 v2 ... vd`` per line.

    A first line holding exactly two integers is treated as a
    ``count dim`` header.  All vectors must share one dimension.
    """
    table = None
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            parts = raw.split()
            if not parts:
                continue
            if lineno == 1 and len(parts) == 2:
                try:
                    int(parts[0]), int(parts[1])
                except ValueError:
                    pass
                else:
                    table = WordVectorTable(int(parts[1]))
                    continue
            token, values = parts[0], parts[1:]
            if not values:
                raise ParseError("line has a token but no vector values",
                                 path=path, line=lineno)
            try:
                vec = np.array([float(v) for v in values])
            except ValueError as exc:
                raise ParseError(f"bad float: {exc}", path=path, line=lineno) from None
            if table is None:
                table = WordVectorTable(len(vec))
            if len(vec) != table.dim:
                raise ParseError(f"dimension {len(vec)} differs from {table.dim}",
                                 path=path, line=lineno)
            try:
                table.add(token, vec)
            except ParseError as exc:
                raise ParseError(str(exc), path=path, line=lineno) from None
    return table if table is not None else WordVectorTable(0)


def save_word_vectors(table: WordVectorTable, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{len(table)} {table.dim}\n")
        for token in table.tokens():
            vec = " ".join(f"{x:.8f}" for x in table.get(token))
            fh.write(f"{token} {vec}\n")


def tokenize_name(name: str) -> list:
    """Split an entity name on spaces, underscores and camel-case boundaries."""
    parts = re.split(r"[\s_]+", name.strip())
    tokens = []
    for part in parts:
        tokens.extend(p for p in _CAMEL_BOUNDARY.split(part) if p)
    return [t.lower() for t in tokens]


def entity_vector(table: WordVectorTable, name: str):
    """Unit-norm vector for an entity name, or None if fully out of vocabulary.

    Multi-word names average the vectors of the tokens present in the
    table and renormalize.
    """
    found = [table.get(t) for t in tokenize_name(name) if t in table]
    if not found:
        return None
    mean = np.mean(found, axis=0)
    norm = np.linalg.norm(mean)
    if norm < 1e-12:
        logger.debug("token vectors for %r cancel out; treating as absent", name)
        return None
    return mean / norm


def cosine(u, v) -> float:
    """Cosine similarity of two vectors; raises on zero norm or shape mismatch."""
    u = np.asarray(u, dtype=np.float64)
    v = np.asarray(v, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"shape mismatch: {u.shape} vs {v.shape}")
    nu = np.linalg.norm(u)
    nv = np.linalg.norm(v)
    if nu == 0.0 or nv == 0.0:
        raise ValueError("cosine is undefined for zero-norm vectors")
    return float(np.clip(np.dot(u, v) / (nu * nv), -1.0, 1.0))
