import numpy as np
import pytest
from arenvq import tensor as T
from arenvq.aren import (AttentiveVQVAE, Hierarchy, add_lower_level, build_hierarchy,
    level_spec, level_specs)
from arenvq.config import ModelConfig
from arenvq.errors import ContractError
from arenvq.gradcheck import grad_check
from arenvq.params import ParamStore
from arenvq.tensor import Tensor
from conftest import tiny_model_config


def _shapes(store):
    return [(name, tensor.shape) for name, tensor in store.items()]


def test_level_specs_follow_the_level_table():
    specs = level_specs(3, 256)
    assert [s.downsample for s in specs] == [2, 4, 8]
    assert [s.strided_blocks for s in specs] == [1, 2, 3]
    assert [len(s.filters) for s in specs] == [2, 3, 4]
    assert level_spec(0, 16).filters == (16,)
    assert level_spec(0, 16).strided_blocks == 0


def test_single_level_forward_shapes(rng):
    model = AttentiveVQVAE(tiny_model_config(), dtype=np.float64)
    result = model(Tensor(rng.uniform(size=(2, 16, 16, 3))))
    assert result.recon.shape == (2, 16, 16, 3)
    assert result.hierarchy.latents[0].shape == (2, 2, 2, 4)
    assert result.indices[0].shape == (2, 2, 2)
    assert np.all((result.recon.data > 0) & (result.recon.data < 1))


def test_two_level_forward_shapes(rng):
    model = AttentiveVQVAE(tiny_model_config(levels=2), dtype=np.float64)
    result = model(Tensor(rng.uniform(size=(1, 16, 16, 3))))
    assert [z.shape for z in result.hierarchy.latents] == [(1, 2, 2, 4), (1, 1, 1, 4)]
    assert result.recon.shape == (1, 16, 16, 3)
    assert len(result.codebook_losses) == 2


def test_single_level_encoder_has_no_resize_or_concat(rng):
    model = AttentiveVQVAE(tiny_model_config())
    ops_used = T.trace_ops(model.encode(Tensor(rng.uniform(size=(1, 16, 16, 3)))).bottom)
    assert "resize_nearest" not in ops_used
    assert "concat" not in ops_used
    assert "matmul" in ops_used

    two = AttentiveVQVAE(tiny_model_config(levels=2))
    ops_used = T.trace_ops(two.encode(Tensor(rng.uniform(size=(1, 16, 16, 3)))).bottom)
    assert "resize_nearest" in ops_used and "concat" in ops_used


def test_no_attention_removes_attention_ops(rng):
    model = AttentiveVQVAE(tiny_model_config(levels=2, attention=False))
    ops_used = T.trace_ops(model.encode(Tensor(rng.uniform(size=(1, 16, 16, 3)))).bottom)
    assert "matmul" not in ops_used
    assert not any(".attention." in name for name in model.params)


def test_add_lower_level_matches_direct_build(rng):
    specs = level_specs(2, 4, filters={1: (4, 4), 2: (4, 4, 4)})

    grown_store = ParamStore(np.float64)
    grown = Hierarchy(grown_store, specs[1], 4, 8, rng=np.random.default_rng(5))
    add_lower_level(grown, specs[0])

    built_store = ParamStore(np.float64)
    built = build_hierarchy(built_store, specs, 4, 8, rng=np.random.default_rng(5))

    assert _shapes(grown_store) == _shapes(built_store)
    base = Tensor(rng.standard_normal((1, 4, 4, 4)))
    assert (T.trace_ops(grown(base).bottom) == T.trace_ops(built(base).bottom))
    assert grown.depth == built.depth == 2


def test_add_lower_level_checks_resolution(rng):
    store = ParamStore(np.float64)
    hierarchy = Hierarchy(store, level_spec(3, 4, filters=(4, 4, 4, 4)), 4, 8, rng=rng)
    with pytest.raises(ContractError):
        add_lower_level(hierarchy, level_spec(1, 4, filters=(4, 4)))


def test_level_zero_works_at_base_resolution(rng):
    store = ParamStore(np.float64)
    hierarchy = Hierarchy(store, level_spec(1, 4, filters=(4, 4)), 4, 8, rng=rng)
    add_lower_level(hierarchy, level_spec(0, 4))
    out = hierarchy(Tensor(rng.standard_normal((1, 4, 4, 4))))
    assert out.bottom.shape == (1, 4, 4, 4)
    assert out.latents[1].shape == (1, 2, 2, 4)
    assert "encoder.merge0.weight" in store


def test_parameter_ordering_of_ablations():
    totals = {}
    for name, levels, attention in [("A", 1, True), ("H", 2, False), ("AH", 2, True)]:
        model = AttentiveVQVAE(ModelConfig(levels=levels, attention=attention))
        counts = model.param_counts()
        assert sum(counts.values()) == model.params.count()
        totals[name] = model.params.count()
    assert totals["A"] < totals["H"] < totals["AH"]


def test_param_counts_per_module():
    model = AttentiveVQVAE(ModelConfig(levels=2, latent_dim=64, codebook_size=64))
    counts = model.param_counts()
    assert list(counts) == ["base_encoder", "level2", "level1", "merge1", "codebook2",
                            "codebook1", "decoder"]
    assert counts["codebook1"] == 64 * 64
    assert counts["merge1"] == 128 * 64 + 64
    assert counts["level1"] == 147840 + 147840 + 2 * (128 * 64 + 64) + 64 * 64 + 64


def test_same_seed_same_model():
    a = AttentiveVQVAE(tiny_model_config(), seed=3)
    b = AttentiveVQVAE(tiny_model_config(), seed=3)
    for (name, x), (_, y) in zip(a.params.items(), b.params.items()):
        assert np.array_equal(x.data, y.data), name


def test_reconstruct_returns_array_in_range(rng):
    model = AttentiveVQVAE(tiny_model_config())
    recon = model.reconstruct(rng.uniform(size=(2, 16, 16, 3)).astype(np.float32))
    assert isinstance(recon, np.ndarray)
    assert recon.shape == (2, 16, 16, 3)
    assert recon.min() >= 0 and recon.max() <= 1
    assert model.params.training


def test_mask_channel_input(rng):
    model = AttentiveVQVAE(tiny_model_config(), in_channels=4)
    assert model.reconstruct(rng.uniform(size=(1, 16, 16, 4))).shape == (1, 16, 16, 3)


def test_end_to_end_gradient(rng):
    model = AttentiveVQVAE(tiny_model_config(latent_dim=2, base_filters=(2, 2, 2),
        level_filters={1: (2, 2)}, decoder_filters=2, codebook_size=4), dtype=np.float64)
    img = rng.uniform(size=(2, 8, 8, 3))
    r = rng.standard_normal((2, 8, 8, 3))

    def f(t):
        return T.sum(model.decode(model.encode(t).bottom) * r)

    assert f(Tensor(img)).shape == ()
    assert grad_check(f, img, eps=1e-5) < 1e-4


@pytest.mark.slow
def test_full_scale_shapes(rng):
    from arenvq.adversarial import PatchDiscriminator
    model = AttentiveVQVAE(ModelConfig(levels=3, latent_dim=256, codebook_size=16))
    model.eval()
    with T.no_grad():
        x = Tensor(rng.uniform(size=(1, 256, 256, 3)).astype(np.float32))
        base = model.base(x)
        encoded = model.hierarchy(base)
        logits = PatchDiscriminator().eval()(x)
    assert base.shape == (1, 64, 64, 256)
    assert [o.shape for o in encoded.aren_outputs] == [
        (1, 32, 32, 256), (1, 16, 16, 256), (1, 8, 8, 256)]
    assert logits.shape == (1, 32, 32, 1)
