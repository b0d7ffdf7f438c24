import numpy as np
import numpy.testing as npt
import pytest

from funcnet.activations import Activation


def test_values_match_reference_formulas():
    z = np.linspace(-4.0, 4.0, 33)
    npt.assert_allclose(Activation("tanh")(z), np.tanh(z), rtol=1e-15)
    npt.assert_allclose(Activation("relu")(z), np.maximum(z, 0.0), rtol=1e-15)
    npt.assert_allclose(Activation("sigmoid")(z), 1.0 / (1.0 + np.exp(-z)),
                        rtol=1e-12)
    npt.assert_array_equal(Activation("identity")(z), z)


def test_derivatives_match_finite_differences():
    # stay away from relu's kink, where the derivative is not defined
    z = np.linspace(-3.0, 3.0, 41) + 0.0123
    eps = 1e-6
    for name in ("tanh", "relu", "sigmoid", "identity"):
        act = Activation(name)
        numeric = (act(z + eps) - act(z - eps)) / (2.0 * eps)
        npt.assert_allclose(act.deriv(z), numeric, atol=1e-8)


def test_relu_subgradient_at_zero_is_zero():
    assert Activation("relu").deriv(np.array([0.0]))[0] == 0.0


def test_sigmoid_survives_extreme_inputs():
    out = Activation("sigmoid")(np.array([-1e4, 1e4]))
    assert np.all(np.isfinite(out))
    npt.assert_allclose(out, [0.0, 1.0], atol=1e-12)


def test_unknown_name_is_rejected():
    with pytest.raises(ValueError, match="softmax"):
        Activation("softmax")
