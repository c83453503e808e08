"""Deterministic frozen stand-in for a large text encoder."""

import threading
from typing import Dict, List, Optional, Tuple

import numpy as np

from deig.config.constants import NEG_INF
from deig.config.settings import TextSimConfig
from deig.core.commons.errors import ContractViolation
from deig.core.commons.logger import get_logger
from deig.core.commons.utils import make_rng
from deig.core.condition import GenerationCondition
from deig.core.interfaces.text_encoder import GlobalPromptFeatures, TextEncoder, TextFeatureBatch
from deig.core.tensor import Parameter, Tensor, no_grad, ops
from deig.core.tensor.nn import Module
from deig.core.text.vocab import TokenVocab, tokenize

logger = get_logger(__name__)


class TextSimEncoder(Module, TextEncoder):
    """
    Seeded token embeddings plus a sinusoidal position term, followed by one
    masked self-attention mixing layer with a residual connection.

    Pad positions are zero before mixing, take no part as keys, and are re-zeroed
    after mixing. All weights are Parameters with ``requires_grad=False``.
    """

    def __init__(self, config: TextSimConfig, vocab: Optional[TokenVocab] = None):
        super().__init__()
        self.config = config
        self.vocab = vocab or TokenVocab()
        c = config.channels
        rng = make_rng(config.seed, "text_sim")
        self.embedding = Parameter(rng.normal(0.0, 1.0, (len(self.vocab), c)), requires_grad=False)
        self.w_q = Parameter(rng.normal(0.0, c**-0.5, (c, c)), requires_grad=False)
        self.w_k = Parameter(rng.normal(0.0, c**-0.5, (c, c)), requires_grad=False)
        self.w_v = Parameter(rng.normal(0.0, c**-0.5, (c, c)), requires_grad=False)
        self.w_o = Parameter(rng.normal(0.0, c**-0.5, (c, c)), requires_grad=False)
        self._cache: Dict[Tuple[str, int], np.ndarray] = {}
        self._lock = threading.Lock()

    @property
    def channels(self) -> int:
        return self.config.channels

    @property
    def max_tokens(self) -> int:
        return self.config.max_tokens

    def _positions(self, length: int) -> np.ndarray:
        with no_grad():
            return ops.sinusoidal_embedding(Tensor(np.arange(length)), self.channels).data

    def _encode_ids(self, ids: List[int], length: int) -> np.ndarray:
        n = len(ids)
        x = np.zeros((length, self.channels))
        x[:n] = self.embedding.data[ids] + self._positions(n)

        mask = np.zeros((length, length))
        mask[:, n:] = NEG_INF
        with no_grad():
            h = Tensor(x)
            q, k, v = h @ self.w_q, h @ self.w_k, h @ self.w_v
            mixed, _ = ops.scaled_dot_product_attention(q, k, v, mask)
            out = (h + mixed @ self.w_o).data.copy()
        out[n:] = 0.0
        return out

    def _encode(self, text: str, length: int, what: str) -> Tuple[np.ndarray, int]:
        words = tokenize(text)
        if not words:
            raise ContractViolation(f"Cannot encode an empty {what}")
        if len(words) > length:
            logger.warning(f"{what.capitalize()} has {len(words)} tokens, truncating to {length}: {text!r}")
            words = words[:length]
        key = (text, length)
        with self._lock:
            cached = self._cache.get(key)
        if cached is None:
            cached = self._encode_ids([self.vocab.id(w) for w in words], length)
            with self._lock:
                self._cache[key] = cached
        return cached, len(words)

    def encode_caption(self, caption: str) -> Tensor:
        features, _ = self._encode(caption, self.max_tokens, "caption")
        return Tensor(features.copy(), requires_grad=False)

    def encode_global(self, prompt: str) -> GlobalPromptFeatures:
        features, length = self._encode(prompt, self.config.max_global_tokens, "global prompt")
        return GlobalPromptFeatures(Tensor(features[None].copy()), length)

    def encode_condition(
        self, cond: GenerationCondition
    ) -> Tuple[TextFeatureBatch, GlobalPromptFeatures]:
        if cond.n == 0:
            raise ContractViolation("encode_condition needs at least one instance")
        encoded = [self._encode(caption, self.max_tokens, "caption") for caption in cond.captions]
        stacked = np.stack([features for features, _ in encoded])[None]
        batch = TextFeatureBatch(Tensor(stacked), [length for _, length in encoded])
        return batch, self.encode_global(cond.global_prompt)
