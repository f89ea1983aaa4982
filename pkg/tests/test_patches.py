import struct

import numpy as np
import pytest
from numpy.testing import assert_allclose

from gaussplex.errors import InputError
from gaussplex.patches import (HermiteBasis, PatchConfig,
                               binomial_inner_product,
                               binomial_inner_product_1d, binomial_weights,
                               digit_patch_cloud, extract_patches,
                               hermite_basis, project_and_filter,
                               project_patches, read_idx_images,
                               read_idx_labels)


class TestInnerProduct:
    def test_l1_plain_product(self):
        assert binomial_inner_product(np.array([[3.0]]), np.array([[2.0]])) == 6.0

    def test_weights_sum_to_one(self):
        for l in (2, 5, 11):
            assert_allclose(binomial_weights(l).sum(), 1.0, rtol=1e-14)

    def test_l2_all_ones_unit_norm(self):
        # the binomial normalization makes the constant patch a unit vector
        ones = np.ones((2, 2))
        assert_allclose(binomial_inner_product(ones, ones), 1.0, rtol=1e-14)

    def test_constant_patch_unit_any_l(self):
        for l in (3, 7, 11):
            ones = np.ones((l, l))
            assert_allclose(binomial_inner_product(ones, ones), 1.0, rtol=1e-12)

    def test_size_mismatch(self):
        with pytest.raises(InputError):
            binomial_inner_product(np.ones((2, 2)), np.ones((3, 3)))


class TestHermiteBasis:
    def test_l2_hand_computed(self):
        basis = hermite_basis(2)
        assert_allclose(basis.one_d[0], [1.0, 1.0], atol=1e-12)
        assert_allclose(basis.one_d[1], [-1.0, 1.0], atol=1e-12)

    @pytest.mark.parametrize("l", [3, 7, 11])
    def test_orthonormality(self, l):
        basis = hermite_basis(l)
        assert basis.orthonormality_defect() < 1e-10

    @pytest.mark.parametrize("l", [3, 7, 11])
    def test_2d_tensors_orthonormal(self, l):
        basis = hermite_basis(l)
        pairs = [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        for a, b in pairs:
            for c, d in pairs:
                want = 1.0 if (a, b) == (c, d) else 0.0
                got = binomial_inner_product(basis.tensor(a, b), basis.tensor(c, d))
                assert abs(got - want) < 1e-10

    def test_h0_is_unit_constant(self):
        basis = hermite_basis(7)
        assert_allclose(basis.one_d[0], np.ones(7), atol=1e-12)

    @pytest.mark.parametrize("l", [3, 7, 11])
    def test_leading_coefficient_positive(self, l):
        basis = hermite_basis(l)
        i = np.arange(1, l + 1, dtype=float)
        for a in range(l):
            # projection of the monomial i^a onto H_a is positive
            assert binomial_inner_product_1d(i**a, basis.one_d[a]) > 0

    def test_odd_even_symmetry(self):
        # degree-1 vector is odd about the patch center, degree-2 even
        basis = hermite_basis(7)
        h1, h2 = basis.one_d[1], basis.one_d[2]
        assert_allclose(h1, -h1[::-1], atol=1e-10)
        assert_allclose(h2, h2[::-1], atol=1e-10)

    def test_l_too_small(self):
        with pytest.raises(InputError):
            hermite_basis(1)


class TestExtractPatches:
    def test_one_patch_per_pixel(self):
        imgs = np.random.default_rng(1).random((3, 28, 28))
        patches = extract_patches(imgs, 11)
        assert patches.shape == (3 * 28 * 28, 11, 11)

    def test_w_equals_l_includes_interior(self):
        img = np.arange(25, dtype=float).reshape(5, 5)
        patches = extract_patches(img, 5)
        assert patches.shape[0] == 25
        assert any(np.array_equal(p, img) for p in patches)

    def test_zero_padding(self):
        img = np.ones((4, 4))
        patches = extract_patches(img, 3)
        corner = patches[0]  # centered on pixel (0, 0)
        assert corner[0, 0] == 0.0  # padded region
        assert corner[1, 1] == 1.0

    def test_all_zero_image_filtered_out(self):
        patches = extract_patches(np.zeros((28, 28)), 7)
        basis = hermite_basis(7)
        config = PatchConfig(l=7, intensity_threshold=0.3)
        with pytest.raises(InputError, match="threshold"):
            project_and_filter(patches, basis, config)


class TestProjection:
    def test_constant_patch_zero_coefficients(self):
        basis = hermite_basis(7)
        coefs = project_patches(5.0 * np.ones((1, 7, 7)), basis)
        assert np.abs(coefs).max() < 1e-10

    def test_pure_gradient_patch(self):
        basis = hermite_basis(7)
        patch = np.outer(basis.one_d[1], basis.one_d[0])
        coefs = project_patches(patch[None], basis)
        # components (1,0),(0,1),(2,0),(1,1),(0,2)
        assert_allclose(coefs[0], [1.0, 0.0, 0.0, 0.0, 0.0], atol=1e-10)

    def test_projection_idempotent(self):
        basis = hermite_basis(5)
        rng = np.random.default_rng(2)
        patch = rng.random((5, 5))
        comps = PatchConfig(l=5).components
        c1 = project_patches(patch[None], basis, comps)[0]
        rebuilt = sum(c * basis.tensor(a, b)
                      for c, (a, b) in zip(c1, comps))
        c2 = project_patches(rebuilt[None], basis, comps)[0]
        assert_allclose(c2, c1, atol=1e-10)

    def test_parseval_bound(self):
        basis = hermite_basis(7)
        rng = np.random.default_rng(3)
        patches = rng.random((50, 7, 7))
        coefs = project_patches(patches, basis)
        for patch, c in zip(patches, coefs):
            norm2 = binomial_inner_product(patch, patch)
            assert np.dot(c, c) <= norm2 + 1e-10

    def test_full_gradient_mode_unit_sphere(self):
        basis = hermite_basis(7)
        rng = np.random.default_rng(4)
        patches = rng.random((200, 7, 7))
        cloud = project_and_filter(patches, basis,
                                   PatchConfig(l=7, intensity_threshold=0.02))
        norms = np.linalg.norm(cloud.points, axis=1)
        assert np.abs(norms - 1.0).max() < 1e-10

    def test_quadratic_only_mode(self):
        basis = hermite_basis(7)
        rng = np.random.default_rng(5)
        patches = rng.random((200, 7, 7))
        config = PatchConfig(l=7, intensity_mode="quadratic-only",
                             intensity_threshold=0.05)
        cloud = project_and_filter(patches, basis, config)
        quad = cloud.points[:, 2:5]  # (2,0),(1,1),(0,2)
        assert np.abs(np.linalg.norm(quad, axis=1) - 1.0).max() < 1e-10

    def test_threshold_filters(self):
        basis = hermite_basis(7)
        strong = np.outer(basis.one_d[1], basis.one_d[0])
        weak = 0.01 * strong
        cloud = project_and_filter(np.stack([strong, weak]), basis,
                                   PatchConfig(l=7, intensity_threshold=0.3))
        assert len(cloud) == 1

    def test_config_validation(self):
        with pytest.raises(InputError):
            PatchConfig(l=1)
        with pytest.raises(InputError):
            PatchConfig(l=7, intensity_threshold=0.0)
        with pytest.raises(InputError):
            PatchConfig(l=7, intensity_mode="sometimes")
        with pytest.raises(InputError):
            PatchConfig(l=3, components=((5, 0),))


def write_idx_images(path, imgs):
    imgs = np.asarray(imgs)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">IIII", 0x00000803, *imgs.shape))
        fh.write(imgs.astype(np.uint8).tobytes())


def write_idx_labels(path, labels):
    labels = np.asarray(labels)
    with open(path, "wb") as fh:
        fh.write(struct.pack(">II", 0x00000801, labels.shape[0]))
        fh.write(labels.astype(np.uint8).tobytes())


class TestIdx:
    def test_image_roundtrip(self, tmp_path):
        rng = np.random.default_rng(6)
        imgs = rng.integers(0, 256, (4, 9, 9))
        path = tmp_path / "imgs.idx"
        write_idx_images(path, imgs)
        back = read_idx_images(path)
        assert back.shape == (4, 9, 9)
        assert_allclose(back, imgs / 255.0)

    def test_label_roundtrip(self, tmp_path):
        labels = np.array([3, 1, 4, 1, 5])
        path = tmp_path / "labels.idx"
        write_idx_labels(path, labels)
        assert np.array_equal(read_idx_labels(path), labels)

    def test_bad_magic(self, tmp_path):
        path = tmp_path / "bad.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000999, 1, 2, 2) + b"\0" * 4)
        with pytest.raises(InputError, match="magic"):
            read_idx_images(path)

    def test_truncated(self, tmp_path):
        path = tmp_path / "short.idx"
        path.write_bytes(struct.pack(">IIII", 0x00000803, 2, 4, 4) + b"\0" * 10)
        with pytest.raises(InputError, match="truncated"):
            read_idx_images(path)

    def test_digit_patch_cloud(self, tmp_path):
        # synthetic "digit" images with strong gradients pass the filter
        rng = np.random.default_rng(7)
        imgs = (rng.random((6, 14, 14)) * 255).astype(np.uint8)
        labels = np.array([0, 1, 0, 1, 0, 1])
        ip = tmp_path / "i.idx"
        lp = tmp_path / "l.idx"
        write_idx_images(ip, imgs)
        write_idx_labels(lp, labels)
        images = read_idx_images(ip)
        lab = read_idx_labels(lp)
        cloud = digit_patch_cloud(images, lab, digit=0,
                                  config=PatchConfig(l=5, intensity_threshold=0.05),
                                  per_digit=2)
        assert cloud.dimension == 5
        assert len(cloud) > 0
