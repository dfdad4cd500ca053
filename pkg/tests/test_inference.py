import numpy as np
import pytest

from hesvm.ckks import CkksParams, decode, decrypt, gen_context, keygen
from hesvm.errors import OutOfLevels, TooManySlots
from hesvm.inference import (
    EncryptedModel,
    InferenceOptions,
    classify_encrypted,
    decrypt_scores,
    encrypt_features,
    encrypted_decision,
    infer_testset,
    required_depth,
    required_rotations,
)
from hesvm.svm import Kernel, SvmModel, decision, load_model, predict

from test_svm import SKLEARN_DIR, toy_dual


def small(depth, batch=512):
    return gen_context(CkksParams(ring_dim=1024, mult_depth=depth, scaling_bits=30, first_mod_bits=60,
                                  security_level=None, batch_size=batch))


@pytest.fixture(scope="module")
def ctx2():
    return small(2)


@pytest.fixture(scope="module")
def ctx4():
    return small(4)


def setup(ctx, model, options=InferenceOptions(), seed=0):
    rng = np.random.default_rng(seed)
    keys = keygen(ctx, rng, rotations=required_rotations(model, options), default_rotations=False)
    return EncryptedModel(ctx, model, options, keys.public, rng), keys, rng


def scores(x, em, keys, rng):
    return classify_encrypted(x, em, keys, rng).scores


class TestFeatures:
    def test_packing(self, ctx2, rng):
        keys = keygen(ctx2, rng, default_rotations=False, relin=False)
        x = np.array([0.5, -1.25, 2.0, 0.1])
        out = decode(ctx2, decrypt(ctx2, encrypt_features(ctx2, x, keys.public, rng), keys.secret))
        np.testing.assert_allclose(out[:4], x, atol=1e-4)
        assert np.max(np.abs(out[4:])) < 1e-4

    def test_zero_vector(self, ctx2, rng):
        keys = keygen(ctx2, rng, default_rotations=False, relin=False)
        out = decode(ctx2, decrypt(ctx2, encrypt_features(ctx2, np.zeros(4), keys.public, rng), keys.secret))
        assert np.max(np.abs(out)) < 1e-4

    def test_too_many_features(self, ctx2, rng):
        keys = keygen(ctx2, rng, default_rotations=False, relin=False)
        with pytest.raises(TooManySlots):
            encrypt_features(ctx2, np.zeros(513), keys.public, rng)


class TestDepth:
    def test_required_depth(self):
        assert required_depth("linear") == 1
        assert required_depth("linear", mask=True) == 2
        assert required_depth("poly_primal", 3) == 3
        assert required_depth("poly_primal", 2) == 2
        assert required_depth("poly_primal", 3, mask=True) == 4
        assert required_depth("poly_dual", 3) == 4
        assert required_depth("poly_primal", 1) == 1

    @pytest.mark.parametrize("kernel,mask", [("linear", False), ("linear", True), ("poly_primal", False),
                                             ("poly_primal", True)])
    def test_calculator_matches_runtime(self, linear_model, iris, kernel, mask):
        x = iris[1].x[0]
        need = required_depth(kernel, 3, mask)
        model = linear_model.with_kernel(kernel)
        for depth in (need - 1, need):
            if depth < 1:
                continue
            em, keys, rng = setup(small(depth), model, InferenceOptions(mask=mask))
            if depth < need:
                with pytest.raises(OutOfLevels):
                    classify_encrypted(x, em, keys, rng)
            else:
                classify_encrypted(x, em, keys, rng)


class TestLinear:
    def test_zero_weights_give_bias(self, ctx2):
        model = SvmModel(Kernel.LINEAR, [1.5, -0.5], (0, 1), weights=np.zeros((2, 4)))
        em, keys, rng = setup(ctx2, model)
        np.testing.assert_allclose(scores(np.ones(4), em, keys, rng), [1.5, -0.5], atol=1e-5)

    def test_iris_scores(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model)
        for x in iris[1].x[:5]:
            np.testing.assert_allclose(scores(x, em, keys, rng), decision(linear_model, x), atol=1e-3)

    @pytest.mark.parametrize("options", [InferenceOptions(mask=True), InferenceOptions(packed=False),
                                         InferenceOptions(mask=True, packed=False),
                                         InferenceOptions(encrypt_weights=True)])
    def test_modes_agree(self, ctx2, linear_model, iris, options):
        x = iris[1].x[3]
        em_a, keys_a, rng_a = setup(ctx2, linear_model)
        em_b, keys_b, rng_b = setup(ctx2, linear_model, options)
        np.testing.assert_allclose(scores(x, em_a, keys_a, rng_a), scores(x, em_b, keys_b, rng_b), atol=1e-5)

    def test_mask_zeroes_other_slots(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model, InferenceOptions(mask=True))
        cts = encrypted_decision(em, encrypt_features(ctx2, iris[1].x[0], keys.public, rng), keys)
        slots = decode(ctx2, decrypt(ctx2, cts[0], keys.secret))
        keep = [s for _, s in em.score_slots()]
        rest = np.delete(slots, keep)
        assert np.max(np.abs(rest)) < 1e-4

    def test_evaluation_with_public_material_only(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model)
        x = iris[1].x[1]
        ct = encrypted_decision(em, encrypt_features(ctx2, x, keys.public, rng), keys.public_only())
        np.testing.assert_allclose(decrypt_scores(em, ct, keys.secret), decision(linear_model, x), atol=1e-3)


class TestPoly:
    def test_degree_one_is_linear(self, ctx2, linear_model, iris):
        x = iris[1].x[2]
        em, keys, rng = setup(ctx2, linear_model.with_kernel("poly_primal", degree=1))
        np.testing.assert_allclose(scores(x, em, keys, rng), decision(linear_model, x), atol=1e-3)

    def test_hand_value(self):
        model = SvmModel(Kernel.POLY_PRIMAL, [0.0], (-1, 1), weights=[[2.0, 0.0, 0.0, 0.0]], degree=3)
        em, keys, rng = setup(small(3), model)
        assert abs(scores([1.0, 5.0, -3.0, 2.0], em, keys, rng)[0] - 8.0) < 1e-2

    def test_iris_primal_scores(self, linear_model, iris):
        model = linear_model.with_kernel("poly_primal")
        em, keys, rng = setup(small(3), model)
        for x in iris[1].x[:5]:
            np.testing.assert_allclose(scores(x, em, keys, rng), decision(model, x), atol=1e-2)

    def test_out_of_levels_at_depth_one(self, linear_model, iris):
        em, keys, rng = setup(small(1), linear_model.with_kernel("poly_primal"))
        with pytest.raises(OutOfLevels):
            classify_encrypted(iris[1].x[0], em, keys, rng)

    def test_toy_dual(self, ctx4):
        model = toy_dual()
        em, keys, rng = setup(ctx4, model)
        for x in ([2.0, -1.0], [0.3, 0.7], [0.0, 0.0]):
            assert abs(scores(x, em, keys, rng)[0] - decision(model, x)[0]) < 1e-3

    def test_toolkit_dual_model(self, ctx4):
        model = load_model(SKLEARN_DIR)
        em, keys, rng = setup(ctx4, model)
        xs = np.loadtxt(SKLEARN_DIR / "inputs.txt")[:4]
        for x in xs:
            assert classify_encrypted(x, em, keys, rng).label == predict(model, x)[0]
            assert abs(scores(x, em, keys, rng)[0] - decision(model, x)[0]) < 1e-2

    def test_iris_dual_labels(self, ctx4, dual_model, iris):
        em, keys, rng = setup(ctx4, dual_model)
        for x in iris[1].x[:3]:
            res = classify_encrypted(x, em, keys, rng)
            assert res.label == predict(dual_model, x)[0]


class TestPipeline:
    def test_result_fields(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model)
        res = classify_encrypted(iris[1].x[0], em, keys, rng)
        assert res.label == predict(linear_model, iris[1].x[0])[0]
        assert all(t > 0 for t in res.timings.values())
        assert res.total_time >= res.timings["evaluate"]
        assert res.slot_error < 1e-3
        assert np.all(np.isfinite(res.scores))

    def test_testset_aggregates(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model)
        _, test = iris
        res = infer_testset(test.x[:6], test.y[:6], em, keys, rng)
        assert res.scale_up == pytest.approx(res.encrypted_time / res.plain_time)
        assert 0.0 <= res.encrypted_accuracy <= 1.0
        np.testing.assert_array_equal(res.encrypted_labels, res.plain_labels)

    def test_single_sample(self, ctx2, linear_model, iris):
        em, keys, rng = setup(ctx2, linear_model)
        res = infer_testset(iris[1].x[:1], iris[1].y[:1], em, keys, rng)
        assert res.encrypted_accuracy in (0.0, 1.0)

    def test_empty_set(self, ctx2, linear_model):
        em, keys, rng = setup(ctx2, linear_model)
        with pytest.raises(ValueError):
            infer_testset(np.zeros((0, 4)), np.zeros(0), em, keys, rng)
