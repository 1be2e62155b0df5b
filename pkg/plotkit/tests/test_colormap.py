import numpy as np

from plotkit.colormap import angle_cmap, angle_to_rgb


def test_cyclic_at_pi():
    lo = angle_to_rgb(-np.pi)
    hi = angle_to_rgb(np.pi)
    np.testing.assert_array_equal(lo, hi)


def test_periodic_in_two_pi():
    # adding 2*pi perturbs the float angle by rounding, so ask for colors
    # equal to working precision rather than bit-identical
    theta = np.linspace(-3.0, 3.0, 17)
    np.testing.assert_allclose(angle_to_rgb(theta),
                               angle_to_rgb(theta + 2.0 * np.pi), atol=1e-8)


def test_colors_distinguish_angles():
    quarter = angle_to_rgb([0.0, np.pi / 2, np.pi, -np.pi / 2])
    for i in range(4):
        for j in range(i + 1, 4):
            assert np.abs(quarter[i] - quarter[j]).max() > 0.2


def test_rgb_range_and_shape():
    rgb = angle_to_rgb(np.zeros((3, 5)))
    assert rgb.shape == (3, 5, 3)
    assert rgb.min() >= 0.0 and rgb.max() <= 1.0


def test_cmap_object():
    cmap = angle_cmap(128)
    assert cmap.N == 128
    # ends of the sampled wheel are one step apart, not identical --
    # the wrap point sits between the last and first entries
    first = np.asarray(cmap(0))
    np.testing.assert_allclose(first[:3], angle_to_rgb(-np.pi))
