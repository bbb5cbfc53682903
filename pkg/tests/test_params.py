import numpy as np
import pytest

from src.errors import (
    ConstraintViolation,
    DimensionMismatch,
    DuplicateEigenvalue,
    NonFiniteInput,
)
from src.filters.volfilter import phi_matrix
from src.model.catalog import catalog_lowrank, dgp_catalog
from src.model.params import (
    GeneralParams,
    ModelOrder,
    canonicalize,
    from_log_garch11,
    g_index,
    layout,
    lowrank_jacobian,
    normalize_factors,
    pack,
    pack_lowrank,
    param_labels,
    params_from_json,
    params_to_json,
    theta_of_vartheta,
    unpack,
    unpack_lowrank,
)
from tests.helpers import random_general, random_lowrank


class TestModelOrder:
    def test_dimensions(self):
        order = ModelOrder(2, 1, 0)
        assert order.dim == 10
        assert order.dim_lowrank == 10
        assert order.window == 2

        big = ModelOrder(5, 1, 0)
        assert big.dim == 43
        assert big.dim_lowrank == 28

    def test_complex_terms_count_twice(self):
        order = ModelOrder(3, 1, 1, k_window=4)
        assert order.n_terms == 3
        assert order.window == 4
        assert order.dim == 3 + 3 * 10 + 3 + 2

    def test_rejects_too_many_terms(self):
        with pytest.raises(ConstraintViolation):
            ModelOrder(2, 1, 1)

    def test_rejects_short_window(self):
        with pytest.raises(ConstraintViolation):
            ModelOrder(3, 1, 0, k_window=2)

    def test_dict_roundtrip(self):
        order = ModelOrder(4, 2, 1, k_window=6)
        assert ModelOrder.from_dict(order.to_dict()) == order


class TestPacking:
    def test_matrices_are_column_major(self):
        params = GeneralParams(
            order=ModelOrder(2, 1, 0),
            omega_bar=[0.0, 0.0],
            lam=[0.5],
            gamma=[],
            phi=[],
            G0=[[[1.0, 2.0], [3.0, 4.0]]],
            G1=np.zeros((0, 2, 2)),
            G2=np.zeros((0, 2, 2)),
            beta1=0.1,
            beta2=0.8,
            Rbar=np.eye(2),
        )
        vector = pack(params)
        lay = layout(params.order)
        assert vector[lay.G0].tolist() == [1.0, 3.0, 2.0, 4.0]
        assert vector.size == params.order.dim

    def test_unpack_inverts_pack(self, rng):
        params = random_general(rng, 3, 1, 1)
        assert unpack(pack(params), params.order) == params

    def test_lowrank_unpack_inverts_pack(self, rng):
        lr = random_lowrank(rng, 3, 1, 1)
        assert unpack_lowrank(pack_lowrank(lr), lr.order) == lr

    def test_wrong_length(self):
        with pytest.raises(DimensionMismatch):
            unpack(np.zeros(9), ModelOrder(2, 1, 0))

    def test_labels_follow_g_index(self):
        order = ModelOrder(2, 1, 0)
        labels = param_labels(order)
        assert len(labels) == order.dim
        assert labels[g_index(order, "G0", 0, 1, 0)] == "G0_1[2,1]"
        assert labels[-1] == "Rbar[2,1]"
        assert len(param_labels(order, lowrank=True)) == order.dim_lowrank


class TestValidation:
    def _base(self, **changes):
        values = dict(
            order=ModelOrder(2, 2, 0),
            omega_bar=[0.1, 0.2],
            lam=[0.6, -0.4],
            gamma=[],
            phi=[],
            G0=np.full((2, 2, 2), 0.01),
            G1=np.zeros((0, 2, 2)),
            G2=np.zeros((0, 2, 2)),
            beta1=0.1,
            beta2=0.8,
            Rbar=[[1.0, 0.3], [0.3, 1.0]],
        )
        values.update(changes)
        return GeneralParams(**values)

    def test_valid_point(self):
        assert self._base().validate() is not None

    def test_lambda_outside_unit_interval(self):
        with pytest.raises(ConstraintViolation):
            self._base(lam=[1.0, 0.2]).validate()

    def test_duplicate_lambda(self):
        with pytest.raises(DuplicateEigenvalue):
            self._base(lam=[0.5, 0.5]).validate()

    def test_beta_sum(self):
        with pytest.raises(ConstraintViolation):
            self._base(beta1=0.3, beta2=0.7).validate()

    def test_rbar_not_positive_definite(self):
        with pytest.raises(ConstraintViolation):
            self._base(
                order=ModelOrder(3, 2, 0),
                omega_bar=[0.0, 0.0, 0.0],
                G0=np.zeros((2, 3, 3)),
                Rbar=[[1.0, 0.9, -0.9], [0.9, 1.0, 0.9], [-0.9, 0.9, 1.0]],
            ).validate()

    def test_non_finite(self):
        with pytest.raises(NonFiniteInput):
            self._base(omega_bar=[np.nan, 0.0])

    def test_wrong_shape(self):
        with pytest.raises(DimensionMismatch):
            self._base(G0=np.zeros((1, 2, 2)))


class TestLowRank:
    def test_dgp1_matrix(self, dgp1):
        np.testing.assert_allclose(dgp1.G0[0], np.full((2, 2), 0.045))
        assert dgp1.lam.tolist() == [0.8]

    def test_jacobian_matches_differences(self, rng):
        lr = random_lowrank(rng, 3, 1, 1)
        delta = lowrank_jacobian(lr)
        x = pack_lowrank(lr)
        step = 1e-6
        numeric = np.zeros_like(delta)
        for col in range(x.size):
            shift = np.zeros_like(x)
            shift[col] = step
            up = pack(theta_of_vartheta(unpack_lowrank(x + shift, lr.order, validate=False)))
            down = pack(theta_of_vartheta(unpack_lowrank(x - shift, lr.order, validate=False)))
            numeric[:, col] = (up - down) / (2 * step)
        np.testing.assert_allclose(delta, numeric, atol=1e-8)

    def test_normalize_keeps_theta(self, rng):
        lr = random_lowrank(rng, 3, 1, 1)
        normed = normalize_factors(lr)
        np.testing.assert_allclose(pack(normed.to_general()), pack(lr.to_general()), atol=1e-12)
        assert np.linalg.norm(normed.g0[0, 0]) == pytest.approx(1.0)
        assert normed.g0[0, 0][np.flatnonzero(normed.g0[0, 0])[0]] > 0


class TestCanonicalize:
    def test_sorts_lambda_with_its_matrix(self):
        A = np.array([[0.01, 0.02], [0.03, 0.04]])
        B = np.array([[0.05, 0.0], [0.0, 0.06]])
        params = GeneralParams(
            order=ModelOrder(2, 2, 0),
            omega_bar=[0.0, 0.0],
            lam=[0.3, 0.7],
            gamma=[],
            phi=[],
            G0=[A, B],
            G1=np.zeros((0, 2, 2)),
            G2=np.zeros((0, 2, 2)),
            beta1=0.1,
            beta2=0.8,
            Rbar=np.eye(2),
        )
        canon = canonicalize(params)
        assert canon.lam.tolist() == [0.7, 0.3]
        np.testing.assert_array_equal(canon.G0[0], B)
        np.testing.assert_array_equal(canon.G0[1], A)
        for i in (1, 2, 5):
            np.testing.assert_allclose(phi_matrix(canon, i), phi_matrix(params, i), atol=1e-14)


class TestLogGarchConversion:
    def test_real_eigenvalues(self):
        omega = np.array([0.1, 0.2])
        A1 = np.array([[0.05, 0.02], [0.01, 0.04]])
        B1 = np.array([[0.5, 0.1], [0.0, 0.3]])
        params = from_log_garch11(omega, A1, B1)
        assert (params.order.r, params.order.s) == (2, 0)
        assert params.lam.tolist() == pytest.approx([0.5, 0.3])
        np.testing.assert_allclose(params.omega_bar, np.linalg.solve(np.eye(2) - B1, omega))
        for i in range(1, 7):
            expected = np.linalg.matrix_power(B1, i - 1) @ A1
            np.testing.assert_allclose(phi_matrix(params, i), expected, atol=1e-10)

    def test_complex_pair(self):
        angle = 0.8
        rot = np.array([[np.cos(angle), -np.sin(angle)], [np.sin(angle), np.cos(angle)]])
        B1 = 0.6 * rot
        A1 = np.array([[0.04, 0.01], [0.02, 0.03]])
        params = from_log_garch11([0.0, 0.0], A1, B1)
        assert (params.order.r, params.order.s) == (0, 1)
        assert params.gamma[0] == pytest.approx(0.6)
        assert params.phi[0] == pytest.approx(angle)
        for i in range(1, 7):
            expected = np.linalg.matrix_power(B1, i - 1) @ A1
            np.testing.assert_allclose(phi_matrix(params, i), expected, atol=1e-10)

    def test_rejects_explosive_b(self):
        with pytest.raises(ConstraintViolation):
            from_log_garch11([0.0, 0.0], np.eye(2) * 0.1, np.diag([1.1, 0.2]))


class TestJson:
    def test_general_roundtrip(self, rng):
        params = random_general(rng, 3, 2, 0)
        assert params_from_json(params_to_json(params)) == params

    def test_lowrank_roundtrip(self):
        lr = catalog_lowrank("DGP3")
        data = params_to_json(lr)
        assert data["kind"] == "lowrank"
        assert params_from_json(data) == lr

    def test_missing_entry(self):
        data = params_to_json(dgp_catalog("DGP1"))
        del data["values"]["beta1"]
        with pytest.raises(DimensionMismatch):
            params_from_json(data)
