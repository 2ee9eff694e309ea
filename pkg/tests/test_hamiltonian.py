import math

import numpy as np
import pytest

from wtpm.errors import CapacityError, DimensionError
from wtpm.hamiltonian import (
    HubbardOperator,
    HubbardSpec,
    hubbard_operator,
    laplacian_eigenvalues,
    laplacian_operator,
)
from wtpm.matrix import SparseColumnMatrix
from wtpm.oracle import dense_eig, operator_spectrum


def test_two_site_free_ground_state():
    op = hubbard_operator(HubbardSpec(2, 1, 1, t=1.0, U=0.0))
    assert op.dim == 4
    lam = operator_spectrum(op).eigenvalues
    assert abs(lam[0] + 2.0) <= 1e-12


def test_two_site_atomic_limit_diagonal():
    op = hubbard_operator(HubbardSpec(2, 1, 1, t=0.0, U=4.0))
    D = op.to_dense()
    assert np.array_equal(D, np.diag(np.diag(D)))
    assert sorted(np.diag(D).tolist()) == [0.0, 0.0, 4.0, 4.0]


def test_two_site_interacting_ground_state():
    lam = operator_spectrum(hubbard_operator(HubbardSpec(2, 1, 1, t=1.0, U=4.0))).eigenvalues
    assert abs(lam[0] - (2 - 2 * math.sqrt(2))) <= 1e-12


def test_six_site_half_filling_dimension():
    spec = HubbardSpec(6, 3, 3)
    assert spec.dim == 400
    assert hubbard_operator(spec).dim == 400


def test_grid_dimension_and_bonds():
    spec = HubbardSpec((2, 2), 2, 1)
    assert spec.n_sites == 4
    assert spec.dim == math.comb(4, 2) * 4
    assert spec.bonds() == [(0, 1), (0, 2), (1, 3), (2, 3)]
    # periodic wrap only adds new bonds for lengths above 2
    assert HubbardSpec(4, 1, 1, boundary="periodic").bonds() == [(0, 1), (0, 3), (1, 2), (2, 3)]


@pytest.mark.parametrize("kw", [dict(sites=0, n_up=0, n_down=0), dict(sites=3, n_up=4, n_down=0),
                                dict(sites=3, n_up=1, n_down=1, boundary="twisted"),
                                dict(sites=(2, 0), n_up=0, n_down=0)])
def test_spec_validation(kw):
    with pytest.raises(ValueError):
        HubbardSpec(**kw)


def test_capacity_error():
    with pytest.raises(CapacityError):
        hubbard_operator(HubbardSpec(16, 8, 8), max_dim=10**6)


@pytest.mark.parametrize("spec", [HubbardSpec(5, 2, 2, t=1.0, U=3.0),
                                  HubbardSpec((3, 2), 2, 3, t=0.7, U=2.0, boundary="periodic"),
                                  HubbardSpec(6, 3, 3, U=4.0)])
def test_columns_symmetric_sorted_and_bounded(spec):
    op = HubbardOperator(spec)
    D = op.to_dense()
    assert np.array_equal(D, D.T)
    bound = op.max_column_nnz()
    assert bound == 1 + spec.n_up * (spec.n_sites - spec.n_up) + spec.n_down * (spec.n_sites - spec.n_down)
    for k in range(op.dim):
        idx, val = op.column(k)
        assert np.all(np.diff(idx) > 0) and np.all(val != 0)
        assert len(idx) <= bound


def test_particle_number_conserved():
    spec = HubbardSpec((2, 3), 2, 2, U=1.0)
    op = HubbardOperator(spec)
    for k in range(op.dim):
        idx, _ = op.column(k)
        for i in idx:
            up, dn = op.occupations(int(i))
            assert bin(up).count("1") == 2 and bin(dn).count("1") == 2


def test_diagonal_counts_double_occupancy():
    spec = HubbardSpec(4, 2, 2, U=2.5)
    op = HubbardOperator(spec)
    for k in range(op.dim):
        up, dn = op.occupations(k)
        assert op.diagonal()[k] == 2.5 * bin(up & dn).count("1")


def test_basis_order_and_index():
    op = HubbardOperator(HubbardSpec(3, 1, 2))
    assert op.up_states == [0b001, 0b010, 0b100]
    assert op.down_states == [0b011, 0b101, 0b110]
    assert op.index(0b010, 0b101) == 1 * 3 + 1
    assert op.occupations(4) == (0b010, 0b101)


def test_fermionic_sign_between_endpoints():
    # one up electron hopping past nothing; two down electrons where the hop
    # 0 -> 2 passes the electron on site 1 and picks up a minus sign
    op = HubbardOperator(HubbardSpec(3, 0, 2, t=1.0, boundary="periodic"))
    D = op.to_dense()
    a = op.index(0, 0b011)  # sites 0,1
    b = op.index(0, 0b110)  # sites 1,2
    # hop 0 -> 2 along the periodic bond (0,2) crosses site 1 which is occupied
    assert D[b, a] == 1.0
    c = op.index(0, 0b101)
    assert D[c, a] == -1.0  # hop 1 -> 2, nothing in between


def test_matrix_free_matches_cached():
    spec = HubbardSpec(4, 2, 2, U=4.0)
    cached = hubbard_operator(spec)
    assert isinstance(cached, SparseColumnMatrix)
    free = hubbard_operator(spec, cache_nnz=0)
    assert isinstance(free, HubbardOperator)
    X = np.random.default_rng(0).standard_normal((spec.dim, 3))
    assert np.allclose(free.apply(X), cached.apply(X), rtol=0, atol=1e-13)


def test_laplacian_small_spectra():
    assert np.allclose(operator_spectrum(laplacian_operator(2)).eigenvalues, [1.0, 3.0], atol=1e-14)
    lam = operator_spectrum(laplacian_operator(5)).eigenvalues
    assert abs(lam[0] - (2 - 2 * math.cos(math.pi / 6))) <= 1e-12
    assert abs(lam[0] - 0.267949) <= 1e-6


def test_laplacian_200_matches_dense_oracle():
    lam = dense_eig(laplacian_operator(200).to_dense()).eigenvalues
    assert np.max(np.abs(lam - laplacian_eigenvalues(200))) <= 1e-12


def test_laplacian_requires_two():
    with pytest.raises(DimensionError):
        laplacian_operator(1)
