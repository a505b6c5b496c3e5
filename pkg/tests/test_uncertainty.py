import numpy as np
import pytest
from robust_capacity.channel import ChannelMatrix, InputDistribution, bsc_matrix, mutual_information
from robust_capacity.exceptions import (
    ChannelError, DimensionMismatchError, NegativeEntryError, PerturbationOutOfSetError
)
from robust_capacity.prox import euclidean_projection
from robust_capacity.uncertainty import (
    PerturbationSet, SetKind, UncertaintyModel, assemble, grad_xi, robust_objective
)


def _random_point(kind, dim, rng):
    """Random point of a perturbation set"""
    if kind is SetKind.SIMPLEX:
        return rng.dirichlet(np.ones(dim))
    return euclidean_projection(rng.uniform(-1.2, 1.2, size=dim), kind)


@pytest.mark.unit
def test_perturbation_set_rejects_unknown_kind():
    """Test set construction errors"""
    with pytest.raises(ChannelError, match="unknown perturbation set kind"):
        PerturbationSet("hexagon", 2)

    with pytest.raises(ChannelError, match="at least 1"):
        PerturbationSet(SetKind.INF_BALL, 0)


@pytest.mark.unit
def test_perturbation_set_membership():
    """Test membership for every set kind"""
    cases = [
        (SetKind.INF_BALL, [1.0, -1.0], [1.1, 0.0]),
        (SetKind.TWO_BALL, [0.6, 0.8], [0.8, 0.8]),
        (SetKind.SIMPLEX, [0.3, 0.7], [0.5, 0.6]),
        (SetKind.BOX_CAP_TWO_BALL, [0.6, 0.8], [-0.1, 0.5]),
    ]
    for kind, inside, outside in cases:
        pset = PerturbationSet(kind, 2)
        assert pset.contains(np.array(inside))
        assert not pset.contains(np.array(outside))
        assert pset.contains(pset.center())


@pytest.mark.unit
def test_linear_min_matches_sampling(rng):
    """Test the closed-form linear minimum against sampled points of the set"""
    for kind in SetKind:
        pset = PerturbationSet(kind, 3)
        g = rng.normal(size=3)
        sampled = min(float(g @ _random_point(kind, 3, rng)) for _ in range(2000))
        assert pset.linear_min(g) <= sampled + 1e-12
        assert pset.linear_min(g) == pytest.approx(sampled, abs=0.15)


@pytest.mark.unit
def test_model_rejects_direction_with_row_sum():
    """Test that directions must keep row sums"""
    directions = np.array([[[0.1, 0.0], [0.0, 0.0]]])
    with pytest.raises(ChannelError, match="expected 0"):
        UncertaintyModel(bsc_matrix(0.3), directions, PerturbationSet(SetKind.INF_BALL, 1))


@pytest.mark.unit
def test_model_rejects_wrong_direction_shape():
    """Test direction shape check"""
    with pytest.raises(DimensionMismatchError):
        UncertaintyModel(bsc_matrix(0.3), np.zeros((2, 2, 2)), PerturbationSet(SetKind.INF_BALL, 1))


@pytest.mark.unit
def test_model_rejects_negative_entries_over_set():
    """Test that an entry going negative somewhere on the set is reported"""
    nominal = ChannelMatrix([[0.9, 0.1], [0.5, 0.5]])
    directions = np.array([[[0.2, -0.2], [0.0, 0.0]]])

    with pytest.raises(NegativeEntryError) as exc_info:
        UncertaintyModel(nominal, directions, PerturbationSet(SetKind.INF_BALL, 1))
    assert exc_info.value.index == (0, 1)
    assert exc_info.value.value == pytest.approx(-0.1)


@pytest.mark.unit
def test_entry_minima_exact(bsc_model, rng):
    """Test the exact entry minima against sampled perturbations"""
    assert bsc_model.tau == pytest.approx(0.15)

    nominal = ChannelMatrix([[0.5, 0.3, 0.2], [0.2, 0.5, 0.3]])
    directions = rng.normal(scale=0.01, size=(3, 2, 3))
    directions -= directions.mean(axis=2, keepdims=True)
    for kind in SetKind:
        U = UncertaintyModel(nominal, directions, PerturbationSet(kind, 3, 0.8))
        sampled = np.min([_assemble_raw(U, _random_point(kind, 3, rng)) for _ in range(500)], axis=0)
        assert np.all(U.entry_minima <= sampled + 1e-12)


def _assemble_raw(U, xi):
    return U.nominal.entries + U.set.scale * np.tensordot(xi, U.directions, axes=1)


@pytest.mark.unit
def test_with_scale(bsc_model):
    """Test rescaling the directions"""
    half = bsc_model.with_scale(0.5)

    assert half.set.scale == 0.5
    assert half.tau == pytest.approx(0.225)
    assert np.allclose(half.scaled_directions, 0.5 * bsc_model.directions)

    zero = bsc_model.with_scale(0.0)
    assert np.allclose(assemble(zero, [1.0]).entries, bsc_model.nominal.entries)


@pytest.mark.unit
def test_assemble_bsc_endpoints(bsc_model):
    """Test that the extreme perturbations give the interval endpoints"""
    assert np.allclose(assemble(bsc_model, [0.0]).entries, bsc_model.nominal.entries)
    assert np.allclose(assemble(bsc_model, [1.0]).entries, [[0.55, 0.45], [0.45, 0.55]])
    assert np.allclose(assemble(bsc_model, [-1.0]).entries, [[0.85, 0.15], [0.15, 0.85]])


@pytest.mark.unit
def test_assemble_rejects_outside_set(bsc_model):
    """Test that perturbations outside the set are rejected"""
    with pytest.raises(PerturbationOutOfSetError):
        assemble(bsc_model, [1.5])

    with pytest.raises(DimensionMismatchError):
        assemble(bsc_model, [0.0, 0.0])


@pytest.mark.unit
def test_assemble_keeps_rows_stochastic(small_power4_model, rng):
    """Test row sums of Q(xi) at random points of the set"""
    for _ in range(100):
        xi = _random_point(SetKind.BOX_CAP_TWO_BALL, 2, rng)
        Q = assemble(small_power4_model, xi)
        assert np.allclose(Q.entries.sum(axis=1), 1.0, atol=1e-10)


@pytest.mark.unit
def test_grad_xi_zero_direction(zero_uncertainty_model):
    """Test that a zero direction has zero gradient"""
    g = grad_xi([0.3], InputDistribution.uniform(3), zero_uncertainty_model)
    assert np.array_equal(g, np.zeros(1))


@pytest.mark.unit
def test_grad_xi_bsc_closed_form(bsc_model):
    """Test the BSC gradient at xi = 0 against the derivative of log 2 - H(beta)"""
    g = grad_xi([0.0], InputDistribution.uniform(2), bsc_model)
    assert g[0] == pytest.approx(-0.15 * np.log(0.7 / 0.3), rel=1e-10)


@pytest.mark.unit
def test_grad_xi_matches_finite_differences(small_power4_model, rng):
    """Test grad_xi against central differences at random interior points"""
    h = 1e-5
    U = small_power4_model
    for _ in range(100):
        xi = rng.uniform(0.05, 0.6, size=2) / np.sqrt(2)
        p = InputDistribution(rng.dirichlet(np.ones(U.n_inputs)))

        g = grad_xi(xi, p, U)
        fd = np.array([
            (robust_objective(xi + h * e, p, U) - robust_objective(xi - h * e, p, U)) / (2 * h)
            for e in np.eye(2)
        ])
        assert np.allclose(g, fd, rtol=1e-6, atol=1e-9)


@pytest.mark.unit
def test_grad_xi_rejects_zero_entry():
    """Test that gradients need a strictly positive channel"""
    nominal = ChannelMatrix([[0.8, 0.2], [0.5, 0.5]])
    directions = np.array([[[0.2, -0.2], [0.0, 0.0]]])
    U = UncertaintyModel(nominal, directions, PerturbationSet(SetKind.INF_BALL, 1))

    with pytest.raises(NegativeEntryError):
        grad_xi([1.0], InputDistribution.uniform(2), U)


@pytest.mark.unit
def test_robust_objective(bsc_model):
    """Test phi(xi, p) = I(p, Q(xi))"""
    p = InputDistribution.uniform(2)
    assert robust_objective([1.0], p, bsc_model) == pytest.approx(
        mutual_information(p, bsc_matrix(0.45)), abs=1e-14)


@pytest.mark.unit
def test_from_vertices(weakly_symmetric_pair):
    """Test the convex hull of channels parameterised over the simplex"""
    Q, swapped = weakly_symmetric_pair
    U = UncertaintyModel.from_vertices([Q, swapped])

    assert U.set.kind is SetKind.SIMPLEX
    assert U.n_perturbations == 2
    assert np.allclose(assemble(U, [0.0, 1.0]).entries, swapped.entries)
    # the midpoint has identical rows
    mid = assemble(U, [0.5, 0.5]).entries
    assert np.allclose(mid[0], mid[1])

    with pytest.raises(ChannelError):
        UncertaintyModel.from_vertices([])


@pytest.mark.unit
def test_model_dict_round_trip(bsc_model):
    """Test the JSON model layout"""
    data = bsc_model.to_dict()
    assert data["set"] == {"kind": "inf_ball", "gamma": 1.0}

    rebuilt = UncertaintyModel.from_dict(data)
    assert rebuilt.nominal == bsc_model.nominal
    assert np.array_equal(rebuilt.directions, bsc_model.directions)


@pytest.mark.unit
def test_model_from_dict_without_directions():
    """Test that a model without directions gets one zero direction"""
    U = UncertaintyModel.from_dict({"nominal": [[0.6, 0.4], [0.3, 0.7]]})

    assert U.n_perturbations == 1
    assert U.tau == pytest.approx(0.3)
