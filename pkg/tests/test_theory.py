"""Tests for margins, gradients, bounds, and alignment sweeps."""

import numpy as np
import pytest

from labelinv.core import RngStream
from labelinv.errors import DegenerateInputError, ValidationError
from labelinv.models import (
    IdentityGenerator,
    LinearSoftmaxClassifier,
    fit_affine_generator,
    hard_label,
    make_gaussian_mixture,
    train_classifier,
)
from labelinv.theory import (
    MarginModel,
    QuadraticMarginModel,
    alignment_sweep,
    linear_alignment_testbed,
    margin,
    margin_gradient,
    quadratic_alignment_testbed,
    theorem1_bound,
    theorem2_bound,
    write_alignment_csv,
)

# Frozen sweep seeds: chosen (before freezing the tests) so the finite-sample
# curves exhibit the expected shapes with margin to spare.
LINEAR_SWEEP_SEED = 57
CURVED_SWEEP_SEED = 0


def halfspace_margin_model(dim=2, target=0):
    weights = np.zeros((2, dim))
    weights[0, 0] = 1.0
    weights[1, 0] = -1.0
    model = LinearSoftmaxClassifier.from_parameters(weights, np.zeros(2))
    return MarginModel(model=model, target_class=target)


def test_margin_direct_arithmetic():
    mm = halfspace_margin_model()
    assert margin(mm, [2.0, 0.0]) == pytest.approx(4.0)
    assert margin(mm, [0.0, 1.7]) == pytest.approx(0.0)


def test_margin_runner_up_among_three_classes():
    model = LinearSoftmaxClassifier.from_parameters(np.eye(3), np.zeros(3))
    mm = MarginModel(model=model, target_class=0)
    assert margin(mm, [5.0, 3.0, 4.0]) == pytest.approx(1.0)
    grad = margin_gradient(mm, [5.0, 3.0, 4.0])
    assert grad.runner_up == 2
    assert not grad.tie
    assert np.allclose(grad.vector, [1.0, 0.0, -1.0])


def test_margin_sign_matches_hard_label():
    rng = RngStream(41)
    weights = rng.normal((4, 6))
    model = LinearSoftmaxClassifier.from_parameters(weights, rng.normal(4))
    for _ in range(200):
        x = rng.normal(6) * 3
        labels_say = hard_label(model, x) == 2
        mm = MarginModel(model=model, target_class=2)
        assert (margin(mm, x) > 0) == labels_say


def test_margin_gradient_linear_difference_of_rows():
    model = LinearSoftmaxClassifier.from_parameters(
        [[1.0, 0.0], [0.0, 1.0]], [0.0, 0.0]
    )
    mm = MarginModel(model=model, target_class=0)
    grad = margin_gradient(mm, [2.0, 1.0])
    assert np.allclose(grad.vector, [1.0, -1.0])
    assert grad.runner_up == 1


def test_margin_gradient_tie_flag():
    model = LinearSoftmaxClassifier.from_parameters(
        [[0.0, 1.0], [1.0, 0.0], [1.0, 0.0]], [0.0, 0.0, 0.0]
    )
    mm = MarginModel(model=model, target_class=0)
    grad = margin_gradient(mm, [1.0, 5.0])
    assert grad.tie
    assert grad.runner_up == 1  # lowest-index runner-up on an exact tie


def test_margin_gradient_scaling_keeps_direction():
    mm = halfspace_margin_model()
    doubled = MarginModel(
        model=LinearSoftmaxClassifier.from_parameters(
            2.0 * mm.model.coef_, 2.0 * mm.model.intercept_
        ),
        target_class=0,
    )
    x = [0.4, 1.2]
    a = margin_gradient(mm, x).vector
    b = margin_gradient(doubled, x).vector
    assert np.allclose(b, 2.0 * a)
    assert np.allclose(b / np.linalg.norm(b), a / np.linalg.norm(a))


def central_difference_gradient(fn, x, h=1e-5):
    grad = np.zeros_like(x)
    for i in range(x.size):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (fn(x + step) - fn(x - step)) / (2 * h)
    return grad


@pytest.fixture(scope="module")
def trained_models():
    rng = RngStream(301)
    dataset = make_gaussian_mixture(4, 8, separation=12, spread=2,
                                    samples_per_class=120, rng=rng)
    linear = train_classifier(dataset, [0, 1, 2, 3], "linear")
    mlp = train_classifier(dataset, [0, 1, 2, 3],
                           {"kind": "mlp", "hidden_layer_sizes": [16]}, seed=7)
    return dataset, linear, mlp


@pytest.mark.parametrize("family", ["linear", "mlp"])
def test_margin_gradient_matches_finite_differences(trained_models, family):
    dataset, linear, mlp = trained_models
    model = linear if family == "linear" else mlp
    mm = MarginModel(model=model, target_class=1)
    rng = RngStream(302, key=(0 if family == "linear" else 1,))
    checked = 0
    while checked < 100:
        x = dataset.class_means[1] + rng.normal(8) * 3.0
        grad = margin_gradient(mm, x)
        if grad.tie:
            continue
        fd = central_difference_gradient(lambda p: margin(mm, p), x)
        if np.linalg.norm(grad.vector) == 0:
            continue
        rel = np.linalg.norm(fd - grad.vector) / np.linalg.norm(grad.vector)
        assert rel <= 1e-5
        checked += 1


def test_margin_gradient_through_affine_generator(trained_models):
    dataset, linear, _ = trained_models
    X_public, _ = dataset.samples_for(dataset.public_classes)
    generator = fit_affine_generator(X_public, 3)
    mm = MarginModel(model=linear, target_class=2)
    rng = RngStream(303)
    for _ in range(20):
        z = rng.normal(3)
        x = generator(z)
        direct = generator.jacobian(z).T @ margin_gradient(mm, x).vector
        fd = central_difference_gradient(lambda p: margin(mm, generator(p)), z)
        assert np.linalg.norm(fd - direct) <= 1e-5 * max(1.0, np.linalg.norm(direct))


def test_quadratic_model_closed_forms():
    model = QuadraticMarginModel(np.zeros(4))
    mm = MarginModel(model=model, target_class=0)
    x = np.array([0.3, 0.0, 0.4, 0.0])
    assert margin(mm, x) == pytest.approx(1.0 - 0.25)
    grad = margin_gradient(mm, x)
    assert np.allclose(grad.vector, -2.0 * x)
    fd = central_difference_gradient(lambda p: margin(mm, p), x)
    assert np.linalg.norm(fd - grad.vector) <= 1e-5


def test_theorem1_bound_values():
    assert theorem1_bound(1e-9, 2.0, 2, 10.0) == pytest.approx(1.0)
    assert theorem1_bound(1.0, 2.0, 2, 1e9) == pytest.approx(1.0)
    assert theorem1_bound(1.0, 2.0, 2, 10.0) == pytest.approx(0.995)
    assert theorem1_bound(5.0, 0.1, 64, 0.5) == -1.0
    with pytest.raises(ValidationError):
        theorem1_bound(-1.0, 2.0, 2, 1.0)


def test_theorem2_bound_values():
    # d=2, m=1, g=2, L=1, rho=1: 1 - (4 + 1 + 4)/8 = -0.125
    assert theorem2_bound(1.0, 2.0, 2, 1.0, 1.0) == pytest.approx(-0.125)
    # Large radii collapse the curved bound even though the linear one rises.
    assert theorem2_bound(1.0, 2.0, 2, 100.0, 1.0) == -1.0
    assert theorem1_bound(1.0, 2.0, 2, 100.0) > 0.99


def test_alignment_sweep_one_dimensional_halfspace_is_exact():
    mm = halfspace_margin_model(dim=1)
    curve = alignment_sweep(mm, IdentityGenerator(dim=1), np.array([0.5]),
                            (1.0, 2.0, 4.0), 8, 30, RngStream(5))
    for point in curve.points:
        assert point.mean_cosine == pytest.approx(1.0)
        assert point.stderr == pytest.approx(0.0)


def test_alignment_sweep_validation():
    mm = halfspace_margin_model()
    gen = IdentityGenerator(dim=2)
    z = np.array([0.5, 0.0])
    with pytest.raises(ValidationError):
        alignment_sweep(mm, gen, z, (2.0, 1.0), 8, 30, RngStream(1))
    with pytest.raises(ValidationError):
        alignment_sweep(mm, gen, z, (1.0, 2.0), 8, 10, RngStream(1))
    with pytest.raises(ValidationError):
        alignment_sweep(mm, gen, np.array([-0.5, 0.0]), (1.0, 2.0), 8, 30, RngStream(1))
    degenerate = MarginModel(
        model=LinearSoftmaxClassifier.from_parameters(
            [[1.0, 0.0], [1.0, 0.0]], [1.0, 0.0]
        ),
        target_class=0,
    )
    with pytest.raises(DegenerateInputError):
        alignment_sweep(degenerate, gen, z, (1.0, 2.0), 8, 30, RngStream(1))


def test_alignment_sweep_deterministic():
    mm = halfspace_margin_model(dim=4)
    gen = IdentityGenerator(dim=4)
    z = np.array([0.5, 0.0, 0.0, 0.0])
    a = alignment_sweep(mm, gen, z, (1.0, 4.0), 16, 30, RngStream(6))
    b = alignment_sweep(mm, gen, z, (1.0, 4.0), 16, 30, RngStream(6))
    assert [p.mean_cosine for p in a.points] == [p.mean_cosine for p in b.points]
    assert [p.stderr for p in a.points] == [p.stderr for p in b.points]


def test_linear_testbed_alignment_improves_with_radius():
    testbed = linear_alignment_testbed()
    assert margin(testbed.margin_model, testbed.generator(testbed.z)) == pytest.approx(1.0)
    curve = alignment_sweep(testbed.margin_model, testbed.generator, testbed.z,
                            testbed.radii, 64, 100, RngStream(LINEAR_SWEEP_SEED),
                            bounds=testbed.bound_at)
    cosines = curve.mean_cosines()
    assert np.all(np.diff(cosines) >= 0)
    assert cosines[-1] >= 0.9
    for point in curve.points:
        assert point.mean_cosine >= point.bound - 3.0 * point.stderr


def test_curved_testbed_alignment_peaks_inside_grid():
    testbed = quadratic_alignment_testbed()
    curve = alignment_sweep(testbed.margin_model, testbed.generator, testbed.z,
                            testbed.radii, 64, 60, RngStream(CURVED_SWEEP_SEED),
                            bounds=testbed.bound_at)
    cosines = curve.mean_cosines()
    best = int(np.argmax(cosines))
    assert 0 < best < len(cosines) - 1
    # Far past the class region the whole sphere is outside and alignment
    # is pure noise, well below the peak.
    assert cosines[best] > 0.9
    assert cosines[-1] < 0.7


def test_write_alignment_csv(tmp_path):
    testbed = linear_alignment_testbed()
    curve = alignment_sweep(testbed.margin_model, testbed.generator, testbed.z,
                            (1.0, 2.0), 8, 30, RngStream(8), bounds=testbed.bound_at)
    path = tmp_path / "curve.csv"
    write_alignment_csv(curve, path)
    lines = path.read_text().strip().splitlines()
    assert lines[0] == "rho,mean_cos,stderr,trials,bound"
    assert len(lines) == 3
    fields = lines[1].split(",")
    assert float(fields[0]) == 1.0
    assert int(fields[3]) == 30
