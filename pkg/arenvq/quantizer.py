"""
Vector quantization: codebooks, nearest-entry assignment and the training losses
that go with it.
"""
import logging
import numpy as np
from arenvq import tensor as T
from arenvq.errors import ContractError
from arenvq.tensor import Tensor, record

logger = logging.getLogger(__name__)

# Candidates whose expanded distance is this close to the best are re-ranked
# with exact float64 differences.
TIE_TOLERANCE = 1e-6


class Codebook(object):
    """K embedding vectors of dimension c plus per-entry usage counters."""

    def __init__(self, embeddings):
        if not isinstance(embeddings, Tensor):
            embeddings = Tensor(embeddings)
        if embeddings.ndim != 2 or embeddings.shape[0] < 1 or embeddings.shape[1] < 1:
            raise ContractError("Codebook needs a (K, c) table with K, c >= 1, got {}"
                .format(embeddings.shape))
        self.embeddings = embeddings
        self.usage = np.zeros(embeddings.shape[0], dtype=np.int64)
        self.instrumented = False
        self.initialized = False

    @property
    def size(self):
        return self.embeddings.shape[0]

    @property
    def dim(self):
        return self.embeddings.shape[1]

    def reset_usage(self):
        self.usage[:] = 0

    def record_usage(self, indices):
        self.usage += np.bincount(np.asarray(indices).reshape(-1),
            minlength=self.size).astype(np.int64)

    def initialize_from(self, z, rng):
        """Seed the entries with random latent vectors from a batch."""
        flat = np.asarray(z).reshape(-1, self.dim)
        replace = flat.shape[0] < self.size
        rows = rng.choice(flat.shape[0], size=self.size, replace=replace)
        self.embeddings.data = flat[rows].astype(self.embeddings.dtype).copy()
        self.initialized = True
        logger.debug("Initialized %d codebook entries from %d latent vectors",
            self.size, flat.shape[0])


def nearest_indices(flat, embeddings):
    """
    Index of the L2-nearest embedding for every row of flat, lowest index on ties.

    Distances use the |z|^2 - 2 z.e + |e|^2 expansion in the input precision;
    rows with near-tied candidates are re-ranked with exact float64 distances.
    """
    flat = np.asarray(flat)
    embeddings = np.asarray(embeddings)
    distances = (np.sum(flat * flat, axis=1, keepdims=True)
        - 2.0 * flat @ embeddings.T
        + np.sum(embeddings * embeddings, axis=1))
    best = distances.min(axis=1, keepdims=True)
    scale = (np.sum(flat * flat, axis=1, keepdims=True)
        + np.max(np.sum(embeddings * embeddings, axis=1)))
    tolerance = TIE_TOLERANCE + 8.0 * np.finfo(distances.dtype).eps * scale
    near = distances <= best + tolerance
    indices = np.argmin(distances, axis=1)

    ambiguous = np.flatnonzero(near.sum(axis=1) > 1)
    if ambiguous.size:
        flat64 = flat.astype(np.float64)
        table64 = embeddings.astype(np.float64)
        for row in ambiguous:
            candidates = np.flatnonzero(near[row])
            exact = np.sum((flat64[row] - table64[candidates]) ** 2, axis=-1)
            indices[row] = candidates[np.argmin(exact)]
    return indices


def quantize(z, codebook):
    """
    Map every latent pixel of z (b, h, w, c) to its nearest codebook entry.

    Returns (indices (b, h, w), quantized (b, h, w, c)); quantized is a gather
    from the codebook, so it carries gradients back to the embeddings.
    """
    if codebook.size < 1:
        raise ContractError("Cannot quantize with an empty codebook")
    if z.shape[-1] != codebook.dim:
        raise ContractError("Latent channels {} do not match codebook dimension {}"
            .format(z.shape[-1], codebook.dim))
    flat = z.data.reshape(-1, codebook.dim)
    indices = nearest_indices(flat, codebook.embeddings.data).reshape(z.shape[:-1])
    if codebook.instrumented:
        codebook.record_usage(indices)
    quantized = T.take_rows(codebook.embeddings, indices)
    return indices, quantized


def vq_losses(z, quantized, beta=0.25):
    """
    (codebook_loss, commitment_loss).

    codebook_loss = mean((sg(z) - q)^2) moves the embeddings;
    commitment_loss = beta * mean((z - sg(q))^2) moves the encoder.
    """
    if z.shape != quantized.shape:
        raise ContractError("vq_losses shape mismatch: {} vs {}"
            .format(z.shape, quantized.shape))
    codebook_loss = T.mean(T.square(T.stop_gradient(z) - quantized))
    commitment_loss = T.mean(T.square(z - T.stop_gradient(quantized))) * beta
    return codebook_loss, commitment_loss


def straight_through(z, quantized):
    """Forward value of quantized, identity gradient to z."""
    if z.shape != quantized.shape:
        raise ContractError("straight_through shape mismatch: {} vs {}"
            .format(z.shape, quantized.shape))

    def backward(g):
        return (g,)
    return record(quantized.data.copy(), (z,), "straight_through", backward)


def active_count(codebook):
    return int(np.count_nonzero(codebook.usage >= 1))


class VectorQuantizer(object):
    """Codebook living in a ParamStore, initialized lazily from the first batch."""

    def __init__(self, store, name, size, dim, beta=0.25, rng=None):
        self.name = name
        self.beta = beta
        self.rng = rng if rng is not None else np.random.default_rng(0)
        embeddings = store.add(name + ".embeddings",
            self.rng.uniform(-1.0 / size, 1.0 / size, size=(size, dim)))
        self.codebook = Codebook(embeddings)

    def param_count(self):
        return self.codebook.embeddings.size

    def __call__(self, z):
        if not self.codebook.initialized:
            self.codebook.initialize_from(z.data, self.rng)
        indices, quantized = quantize(z, self.codebook)
        codebook_loss, commitment_loss = vq_losses(z, quantized, self.beta)
        return QuantizerOutput(indices, straight_through(z, quantized),
            codebook_loss, commitment_loss)


class QuantizerOutput(object):
    def __init__(self, indices, quantized, codebook_loss, commitment_loss):
        self.indices = indices
        self.quantized = quantized
        self.codebook_loss = codebook_loss
        self.commitment_loss = commitment_loss
