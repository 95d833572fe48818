import math
import unittest


import numpy as np
import pytest


from curloc.errors import InputError
from curloc.geometry import (
    MIN_BOX_AREA,
    Box,
    clamp_to_unit,
    decode_boxes,
    encode_box,
    iou,
)


def random_box(rng: np.random.Generator) -> Box:
    x1, x2 = np.sort(rng.uniform(0, 1, 2))
    y1, y2 = np.sort(rng.uniform(0, 1, 2))
    return Box(x1=x1, y1=y1, x2=x2, y2=y2)


class TestBox(unittest.TestCase):
    def test_rejects_zero_area(self):
        with self.assertRaises(ValueError):
            Box(x1=0.2, y1=0.2, x2=0.2, y2=0.5)

    def test_rejects_swapped_corners(self):
        with self.assertRaises(ValueError):
            Box(x1=0.6, y1=0.2, x2=0.4, y2=0.5)

    def test_rejects_out_of_range(self):
        with self.assertRaises(ValueError):
            Box(x1=-0.1, y1=0.2, x2=0.4, y2=0.5)
        with self.assertRaises(ValueError):
            Box(x1=0.1, y1=0.2, x2=0.4, y2=math.inf)

    def test_from_sequence_needs_four(self):
        with self.assertRaises(InputError):
            Box.from_sequence([0.1, 0.2, 0.3])

    def test_encode(self):
        box = Box(x1=0.4, y1=0.2, x2=0.6, y2=0.6)
        np.testing.assert_allclose(
            encode_box(box), [0.5, 0.4, math.log(0.2), math.log(0.4)]
        )


class TestIou(unittest.TestCase):
    def test_identity(self):
        box = Box(x1=0.1, y1=0.2, x2=0.5, y2=0.9)
        self.assertEqual(iou(box, box), 1.0)

    def test_disjoint(self):
        a = Box.from_sequence([0, 0, 0.1, 0.1])
        b = Box.from_sequence([0.5, 0.5, 0.9, 0.9])
        self.assertEqual(iou(a, b), 0.0)

    def test_partial_overlap(self):
        a = Box.from_sequence([0, 0, 0.2, 0.2])
        b = Box.from_sequence([0.1, 0.1, 0.3, 0.3])
        self.assertAlmostEqual(iou(a, b), 1 / 7, places=12)

    def test_symmetry(self):
        rng = np.random.default_rng(3)
        for _ in range(500):
            a, b = random_box(rng), random_box(rng)
            self.assertEqual(iou(a, b), iou(b, a))

    def test_monotone_containment(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            c = random_box(rng)
            # b inside c, a inside b
            fb = rng.uniform(0.1, 0.9, 4)
            b = Box(
                x1=c.x1 + fb[0] * c.width / 2,
                y1=c.y1 + fb[1] * c.height / 2,
                x2=c.x2 - fb[2] * c.width / 2,
                y2=c.y2 - fb[3] * c.height / 2,
            )
            fa = rng.uniform(0.1, 0.9, 4)
            a = Box(
                x1=b.x1 + fa[0] * b.width / 2,
                y1=b.y1 + fa[1] * b.height / 2,
                x2=b.x2 - fa[2] * b.width / 2,
                y2=b.y2 - fa[3] * b.height / 2,
            )
            self.assertGreaterEqual(iou(a, b), iou(a, c))

    def test_unit_iou_only_for_equal_boxes(self):
        a = Box.from_sequence([0.1, 0.1, 0.5, 0.5])
        b = Box.from_sequence([0.1, 0.1, 0.5, 0.5 + 1e-9])
        self.assertEqual(iou(a, a.model_copy()), 1.0)
        self.assertLess(iou(a, b), 1.0)


class TestClampToUnit(unittest.TestCase):
    def test_interior_box(self):
        box = clamp_to_unit([0.5, 0.5, math.log(0.2), math.log(0.2)])
        np.testing.assert_allclose(
            box.as_array(), [0.4, 0.4, 0.6, 0.6], atol=1e-12
        )

    def test_clipped_at_border(self):
        box = clamp_to_unit([0.0, 0.0, math.log(0.5), math.log(0.5)])
        np.testing.assert_allclose(
            box.as_array(), [0.0, 0.0, 0.25, 0.25], atol=1e-12
        )

    def test_area_floor(self):
        box = clamp_to_unit([0.5, 0.5, math.log(1e-9), math.log(1e-9)])
        self.assertAlmostEqual(box.area, MIN_BOX_AREA, places=15)
        self.assertAlmostEqual(box.x1 + box.x2, 1.0, places=12)

    def test_area_floor_at_corner(self):
        box = clamp_to_unit([1.0, 0.0, math.log(1e-9), math.log(1e-9)])
        self.assertAlmostEqual(box.area, MIN_BOX_AREA, places=15)
        self.assertEqual(box.x2, 1.0)
        self.assertEqual(box.y1, 0.0)

    def test_non_finite(self):
        with self.assertRaises(InputError):
            clamp_to_unit([0.5, math.nan, 0.0, 0.0])
        with self.assertRaises(InputError):
            clamp_to_unit([0.5, 0.5, math.inf, 0.0])


def test_decode_keeps_leading_shape():
    raw = np.zeros((3, 5, 4))
    raw[..., 0:2] = 0.5
    raw[..., 2:] = math.log(0.3)
    corners = decode_boxes(raw)
    assert corners.shape == (3, 5, 4)
    np.testing.assert_allclose(corners[1, 2], [0.35, 0.35, 0.65, 0.65])


def test_decode_huge_log_size_fills_image():
    corners = decode_boxes(np.array([0.5, 0.5, 800.0, 800.0]))
    np.testing.assert_array_equal(corners, [0.0, 0.0, 1.0, 1.0])


def test_decode_rejects_wrong_width():
    with pytest.raises(InputError):
        decode_boxes(np.zeros((2, 3)))
