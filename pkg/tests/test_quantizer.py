import numpy as np
import pytest
from arenvq import tensor as T
from arenvq.errors import ContractError
from arenvq.params import ParamStore
from arenvq.quantizer import (Codebook, VectorQuantizer, active_count, nearest_indices,
    quantize, straight_through, vq_losses)
from arenvq.tensor import Tensor


def exhaustive_indices(flat, embeddings):
    flat = np.asarray(flat, dtype=np.float64)
    table = np.asarray(embeddings, dtype=np.float64)
    distances = np.sum((flat[:, np.newaxis, :] - table[np.newaxis]) ** 2, axis=-1)
    return np.argmin(distances, axis=1)


@pytest.fixture
def tied_codebook(rng):
    table = rng.standard_normal((16, 8))
    table[7] = table[3]
    table[12] = table[3]
    return table


def test_matches_exhaustive_scan(rng, tied_codebook):
    latents = rng.standard_normal((1000, 8))
    latents[:50] = tied_codebook[rng.integers(0, 16, size=50)]
    np.testing.assert_array_equal(nearest_indices(latents, tied_codebook),
        exhaustive_indices(latents, tied_codebook))


def test_duplicate_entries_pick_lowest_index(tied_codebook):
    latents = tied_codebook[[12, 7, 3]] + 1e-3
    assert list(nearest_indices(latents, tied_codebook)) == [3, 3, 3]


def test_midpoint_ties_pick_lowest_index():
    table = np.array([[1.0, 0.0], [-1.0, 0.0], [0.0, 5.0]])
    assert list(nearest_indices(np.zeros((1, 2)), table)) == [0]
    assert list(nearest_indices(np.zeros((1, 2)), table[::-1].copy())) == [1]


def test_float32_latents_agree_with_float64_scan(rng):
    table = rng.standard_normal((32, 4)).astype(np.float32)
    latents = rng.standard_normal((500, 4)).astype(np.float32)
    np.testing.assert_array_equal(nearest_indices(latents, table),
        exhaustive_indices(latents, table))


def test_quantize_gathers_codebook_rows(rng):
    codebook = Codebook(rng.standard_normal((5, 3)))
    z = Tensor(rng.standard_normal((2, 2, 2, 3)))
    indices, quantized = quantize(z, codebook)
    assert indices.shape == (2, 2, 2)
    np.testing.assert_array_equal(quantized.data, codebook.embeddings.data[indices])


def test_quantize_rejects_wrong_dimension(rng):
    codebook = Codebook(rng.standard_normal((5, 3)))
    with pytest.raises(ContractError):
        quantize(Tensor(np.zeros((1, 2, 2, 4))), codebook)


def test_empty_codebook_is_rejected():
    with pytest.raises(ContractError):
        Codebook(np.zeros((0, 4)))


def test_straight_through_copies_forward_and_passes_gradient(rng):
    z = Tensor(rng.standard_normal((1, 2, 2, 3)), requires_grad=True)
    q = Tensor(rng.standard_normal((1, 2, 2, 3)))
    out = straight_through(z, q)
    assert np.array_equal(out.data, q.data)
    r = rng.standard_normal((1, 2, 2, 3))
    T.sum(out * r).backward()
    np.testing.assert_array_equal(z.grad, r)


def test_vq_losses_values_and_gradient_routing():
    z = Tensor(np.full((1, 1, 2, 2), 2.0), requires_grad=True)
    table = Tensor(np.ones((1, 2)), requires_grad=True)
    q = T.take_rows(table, np.zeros((1, 1, 2), dtype=np.int64))
    codebook_loss, commitment_loss = vq_losses(z, q, beta=0.25)
    assert codebook_loss.item() == pytest.approx(1.0)
    assert commitment_loss.item() == pytest.approx(0.25)

    codebook_loss.backward()
    assert z.grad is None
    np.testing.assert_allclose(table.grad, [[-1.0, -1.0]])

    commitment_loss.backward()
    np.testing.assert_allclose(z.grad, np.full((1, 1, 2, 2), 0.25 * 2 * 1.0 / 4))


def test_quantizer_initializes_from_first_batch(rng):
    store = ParamStore(np.float64)
    quantizer = VectorQuantizer(store, "codebook1", 4, 3, rng=rng)
    z = Tensor(rng.standard_normal((1, 4, 4, 3)))
    assert not quantizer.codebook.initialized
    out = quantizer(z)
    assert quantizer.codebook.initialized
    flat = z.data.reshape(-1, 3)
    for row in store["codebook1.embeddings"].data:
        assert np.any(np.all(flat == row, axis=1))
    assert out.quantized.shape == z.shape


def test_usage_counts_and_active_vectors(rng):
    codebook = Codebook(np.eye(4))
    codebook.instrumented = True
    z = Tensor(np.array([[[[1.0, 0, 0, 0], [0, 1.0, 0, 0], [1.0, 0, 0, 0]]]]))
    quantize(z, codebook)
    assert list(codebook.usage) == [2, 1, 0, 0]
    assert active_count(codebook) == 2
    codebook.reset_usage()
    assert active_count(codebook) == 0


def test_codebook_loss_gradient_matches_finite_differences(rng):
    from arenvq.gradcheck import grad_check
    z = Tensor(rng.standard_normal((1, 2, 2, 3)))
    table = rng.standard_normal((4, 3))
    indices = nearest_indices(z.data.reshape(-1, 3), table).reshape(1, 2, 2)

    def f(embeddings):
        return vq_losses(z, T.take_rows(embeddings, indices))[0]

    assert grad_check(f, table, eps=1e-5) < 1e-4


def test_quantizing_quantized_latents_changes_nothing(rng):
    codebook = Codebook(rng.standard_normal((16, 4)))
    indices, quantized = quantize(Tensor(rng.standard_normal((2, 3, 3, 4))), codebook)
    again, requantized = quantize(Tensor(quantized.data), codebook)
    np.testing.assert_array_equal(again, indices)
    np.testing.assert_array_equal(requantized.data, quantized.data)


def test_permuting_the_codebook_permutes_the_indices(rng):
    table = rng.standard_normal((16, 4))
    z = Tensor(rng.standard_normal((2, 3, 3, 4)))
    indices, quantized = quantize(z, Codebook(table))
    perm = rng.permutation(16)
    permuted, requantized = quantize(z, Codebook(table[perm]))
    np.testing.assert_array_equal(perm[permuted], indices)
    np.testing.assert_array_equal(requantized.data, quantized.data)
