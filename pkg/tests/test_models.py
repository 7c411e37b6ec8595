"""Tests for classifiers, generators, datasets, and model persistence."""

import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from labelinv.core import RngStream
from labelinv.errors import DegenerateInputError, TrainingError, ValidationError
from labelinv.models import (
    AffineGenerator,
    IdentityGenerator,
    LinearSoftmaxClassifier,
    MlpClassifier,
    SyntheticDataset,
    fit_affine_generator,
    hard_label,
    load_model,
    logits,
    make_gaussian_mixture,
    save_model,
    train_classifier,
)


def halfspace_model():
    return LinearSoftmaxClassifier.from_parameters(
        weights=[[1.0, 0.0], [-1.0, 0.0]], biases=[0.0, 0.0]
    )


def test_linear_logits_direct_arithmetic():
    model = halfspace_model()
    assert np.array_equal(logits(model, [2.0, 0.0]), [2.0, -2.0])


def test_logits_deterministic():
    model = halfspace_model()
    x = [0.3, -1.7]
    assert np.array_equal(logits(model, x), logits(model, x))


def test_mlp_zero_weights_logits_equal_biases():
    model = MlpClassifier.from_parameters(
        weights=[np.zeros((4, 3)), np.zeros((2, 4))],
        biases=[np.zeros(4), np.array([0.5, -0.25])],
    )
    assert np.array_equal(logits(model, [1.0, 2.0, 3.0]), [0.5, -0.25])


def test_hard_label_argmax_and_tie_break():
    assert hard_label(halfspace_model(), [2.0, 0.0]) == 0
    tie = LinearSoftmaxClassifier.from_parameters(
        weights=[[1.0, 0.0], [0.0, 1.0]], biases=[0.0, 0.0]
    )
    assert hard_label(tie, [1.0, 1.0]) == 0
    three = LinearSoftmaxClassifier.from_parameters(
        weights=np.eye(3), biases=np.zeros(3)
    )
    assert hard_label(three, [0.0, 3.0, 1.0]) == 1


def test_hard_label_tie_break_with_offset_classes():
    model = LinearSoftmaxClassifier.from_parameters(
        weights=[[1.0, 0.0], [0.0, 1.0]], biases=[0.0, 0.0], classes=[5, 9]
    )
    assert hard_label(model, [1.0, 1.0]) == 5


def test_hard_label_invariant_under_logit_rescaling():
    model = halfspace_model()
    scaled = LinearSoftmaxClassifier.from_parameters(
        weights=3.5 * model.coef_, biases=3.5 * model.intercept_
    )
    rng = RngStream(3)
    X = rng.normal((50, 2)) * 4
    for x in X:
        assert hard_label(model, x) == hard_label(scaled, x)


def test_logits_dimension_mismatch():
    with pytest.raises(ValidationError):
        logits(halfspace_model(), [1.0, 2.0, 3.0])


@pytest.fixture(scope="module")
def mixture():
    rng = RngStream(7)
    return make_gaussian_mixture(4, 8, separation=20, spread=2,
                                 samples_per_class=100, rng=rng)


def test_linear_training_reaches_target_accuracy(mixture):
    model = train_classifier(mixture, [0, 1, 2, 3], "linear")
    assert model.training_accuracy_ >= 0.99


def test_training_rejects_single_class_subset(mixture):
    with pytest.raises(ValidationError):
        train_classifier(mixture, [2], "linear")


def test_training_same_seed_bitwise_identical(mixture):
    a = train_classifier(mixture, [2, 3], {"kind": "mlp", "hidden_layer_sizes": [8]}, seed=5)
    b = train_classifier(mixture, [2, 3], {"kind": "mlp", "hidden_layer_sizes": [8]}, seed=5)
    for wa, wb in zip(a.weights_, b.weights_):
        assert np.array_equal(wa, wb)
    la = train_classifier(mixture, [0, 1], "linear")
    lb = train_classifier(mixture, [0, 1], "linear")
    assert np.array_equal(la.coef_, lb.coef_)


def test_training_deterministic_labels_on_probe_set(mixture):
    a = train_classifier(mixture, list(range(4)), {"kind": "mlp"}, seed=1)
    b = train_classifier(mixture, list(range(4)), {"kind": "mlp"}, seed=1)
    probe = RngStream(99).normal((1000, 8)) * 10
    assert np.array_equal(a.predict(probe), b.predict(probe))


def test_training_failure_on_inseparable_data():
    means = np.zeros((2, 4))
    rng = RngStream(8)
    X = rng.normal((200, 4))
    y = np.repeat([0, 1], 100)
    dataset = SyntheticDataset(class_means=means, spread=1.0, X=X, y=y,
                               public_classes=(0,), private_classes=(1,))
    with pytest.raises(TrainingError):
        train_classifier(dataset, [0, 1], {"kind": "linear", "max_iter": 50})


def test_train_classifier_rejects_unknown_architecture(mixture):
    with pytest.raises(ValidationError):
        train_classifier(mixture, [0, 1], "transformer")


def test_mlp_trains_on_private_classes(mixture):
    model = train_classifier(mixture, [2, 3], {"kind": "mlp", "hidden_layer_sizes": [16]}, seed=2)
    assert model.training_accuracy_ >= 0.99
    assert list(model.classes_) == [2, 3]
    X, y = mixture.samples_for([2, 3])
    assert np.mean(model.predict(X) == y) >= 0.99


def test_unfitted_predict_raises():
    with pytest.raises(NotFittedError):
        LinearSoftmaxClassifier().predict(np.zeros((1, 3)))
    with pytest.raises(NotFittedError):
        MlpClassifier().predict(np.zeros((1, 3)))


def test_estimators_follow_sklearn_params_protocol():
    model = MlpClassifier(hidden_layer_sizes=(8,), learning_rate=0.1)
    params = model.get_params()
    assert params["hidden_layer_sizes"] == (8,)
    other = clone(model).set_params(learning_rate=0.2)
    assert other.get_params()["learning_rate"] == 0.2


def test_make_gaussian_mixture_split():
    ds = make_gaussian_mixture(10, 6, separation=5, spread=1,
                               samples_per_class=10, rng=RngStream(1))
    assert ds.public_classes == (0, 1, 2, 3, 4)
    assert ds.private_classes == (5, 6, 7, 8, 9)
    assert not set(ds.public_classes) & set(ds.private_classes)


def test_make_gaussian_mixture_zero_spread_pins_samples():
    ds = make_gaussian_mixture(3, 4, separation=5, spread=0.0,
                               samples_per_class=7, rng=RngStream(2))
    assert np.allclose(ds.X, ds.class_means[ds.y])


def test_mixture_supports_accurate_heldout_classification():
    ds = make_gaussian_mixture(6, 8, separation=20, spread=1,
                               samples_per_class=150, rng=RngStream(11))
    model = train_classifier(ds, list(range(6)), "linear")
    X_held, y_held = ds.draw(RngStream(12), 200)
    assert np.mean(model.predict(X_held) == y_held) >= 0.99


def test_mixture_parameter_validation():
    rng = RngStream(0)
    with pytest.raises(ValidationError):
        make_gaussian_mixture(1, 4, 5, 1, 10, rng)
    with pytest.raises(ValidationError):
        make_gaussian_mixture(4, 4, -5, 1, 10, rng)
    with pytest.raises(ValidationError):
        make_gaussian_mixture(4, 4, 5, 1, 10, rng, public_fraction=0.0)


def test_dataset_rejects_overlapping_split():
    with pytest.raises(ValidationError):
        SyntheticDataset(class_means=np.zeros((2, 2)), spread=1.0,
                         X=np.zeros((2, 2)), y=np.array([0, 1]),
                         public_classes=(0,), private_classes=(0, 1))


def test_affine_generator_spans_exact_plane():
    rng = RngStream(21)
    basis = np.array([[1.0, 0.0, 2.0, 0.0, -1.0], [0.0, 1.0, 0.0, 3.0, 1.0]])
    Z = rng.normal((40, 2))
    X = Z @ basis + 4.0
    gen = fit_affine_generator(X, 2)
    recon = gen.transform(gen.project(X))
    assert np.max(np.abs(recon - X)) < 1e-9


def test_affine_generator_full_latent_is_invertible():
    rng = RngStream(22)
    X = rng.normal((60, 4)) @ (np.eye(4) + 0.3) + 2.0
    gen = fit_affine_generator(X, 4)
    probe = rng.normal((10, 4))
    assert np.allclose(gen.transform(gen.project(probe)), probe, atol=1e-8)
    assert np.allclose(gen.project(gen.transform(probe)), probe, atol=1e-8)


def test_affine_generator_reconstruction_matches_eigenvalue_oracle():
    # Independent route: eigendecomposition of the 1/n covariance.  The mean
    # squared reconstruction error must equal the discarded eigenvalue mass.
    ds = make_gaussian_mixture(6, 16, separation=10, spread=3,
                               samples_per_class=80, rng=RngStream(5))
    X, _ = ds.samples_for(ds.public_classes)
    gen = fit_affine_generator(X, 4)
    recon = gen.transform(gen.project(X))
    mse = np.mean(np.sum((X - recon) ** 2, axis=1))
    centered = X - X.mean(axis=0)
    eigenvalues = np.linalg.eigh(centered.T @ centered / X.shape[0]).eigenvalues
    assert abs(mse - eigenvalues[:-4].sum()) < 1e-8


def test_affine_generator_latent_scale_matches_data_std():
    # Unit latent directions decode to steps of one standard deviation
    # along each principal axis.
    ds = make_gaussian_mixture(4, 8, separation=6, spread=2,
                               samples_per_class=200, rng=RngStream(31))
    X, _ = ds.samples_for(ds.public_classes)
    gen = fit_affine_generator(X, 3)
    centered = X - X.mean(axis=0)
    variances = np.sort(np.linalg.eigh(centered.T @ centered / X.shape[0]).eigenvalues)[::-1]
    column_norms = np.linalg.norm(gen.matrix_, axis=0)
    assert np.allclose(column_norms ** 2, variances[:3], rtol=1e-9)


def test_affine_generator_rank_deficiency_error():
    rng = RngStream(23)
    Z = rng.normal((30, 2))
    basis = np.array([[1.0, 0.0, 0.0, 0.0], [0.0, 1.0, 0.0, 0.0]])
    X = Z @ basis
    with pytest.raises(DegenerateInputError):
        fit_affine_generator(X, 3)


def test_affine_generator_parameter_validation():
    rng = RngStream(24)
    X = rng.normal((5, 4))
    with pytest.raises(ValidationError):
        fit_affine_generator(X, 5)
    with pytest.raises(ValidationError):
        fit_affine_generator(X[:3], 3)
    with pytest.raises(NotFittedError):
        AffineGenerator(latent_dim=2).transform(np.zeros(2))


def test_identity_generator_is_identity():
    gen = IdentityGenerator(dim=3)
    z = np.array([1.0, -2.0, 0.5])
    assert np.array_equal(gen(z), z)
    assert np.array_equal(gen.jacobian(z), np.eye(3))
    assert gen.latent_dim == gen.output_dim == 3


def test_model_round_trip_is_bit_faithful(tmp_path, mixture):
    linear = train_classifier(mixture, [0, 1, 2], "linear")
    mlp = train_classifier(mixture, [2, 3], {"kind": "mlp", "hidden_layer_sizes": [8]}, seed=4)
    probe = RngStream(55).normal((200, 8)) * 8

    path = tmp_path / "linear.json"
    save_model(linear, path)
    loaded = load_model(path)
    assert np.array_equal(loaded.coef_, linear.coef_)
    assert np.array_equal(loaded.intercept_, linear.intercept_)
    assert np.array_equal(loaded.classes_, linear.classes_)
    assert np.array_equal(loaded.predict(probe), linear.predict(probe))

    path = tmp_path / "mlp.json"
    save_model(mlp, path)
    loaded = load_model(path)
    for wa, wb in zip(loaded.weights_, mlp.weights_):
        assert np.array_equal(wa, wb)
    assert np.array_equal(loaded.predict(probe), mlp.predict(probe))


def test_model_save_twice_identical_bytes(tmp_path, mixture):
    model = train_classifier(mixture, [0, 1], "linear")
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    save_model(model, a)
    save_model(model, b)
    assert a.read_bytes() == b.read_bytes()


def test_load_model_rejects_bad_documents(tmp_path):
    path = tmp_path / "model.json"
    path.write_text('{"format_version": 99, "kind": "linear_softmax"}')
    with pytest.raises(ValidationError):
        load_model(path)
    path.write_text('{"format_version": 1, "kind": "rbf"}')
    with pytest.raises(ValidationError):
        load_model(path)
    path.write_text(
        '{"format_version": 1, "kind": "linear_softmax", "dims": [3, 2],'
        ' "weights": [[1.0, 0.0], [0.0, 1.0]], "biases": [0.0, 0.0],'
        ' "nonlinearity": "none", "classes": [0, 1]}'
    )
    with pytest.raises(ValidationError):
        load_model(path)
