import json

import numpy as np
import pytest
from hypothesis import given, strategies as st

from secrange.atoms import compound, validate
from secrange.channel import (AuxChain, ChannelCascade, all_compound_pairs,
                              atoms_from_channel, bsc, direct_cmi, h2, joint,
                              load_channel_spec, random_aux, random_cascade,
                              validate_cascade)


def test_identity_joint_is_point_mass_per_path():
    cas = ChannelCascade.identity(3)
    aux = AuxChain.build([[0.5, 0.5], np.eye(2), np.eye(2)])
    p = joint(cas, aux)
    assert p.shape == (2,) * 6
    assert abs(p.sum() - 1) < 1e-12
    assert np.count_nonzero(p) == 2
    assert p[0, 0, 0, 0, 0, 0] == 0.5 and p[1, 1, 1, 1, 1, 1] == 0.5


def test_bsc_composition():
    cas = ChannelCascade.bsc_cascade([0.0, 0.1, 0.1])
    aux = AuxChain.degenerate(3, [0.5, 0.5])
    p = joint(cas, aux)  # axes U1, U2, X, Y1, Y2, Y3
    pxy2 = p.sum(axis=(0, 1, 3, 5))
    pxy1 = p.sum(axis=(0, 1, 4, 5))
    assert abs(pxy2[0, 1] + pxy2[1, 0] - 0.1) < 1e-12
    assert abs(pxy1[0, 1] + pxy1[1, 0] - 0.18) < 1e-12
    assert abs(cas.output_given_x(1)[0, 1] - 0.18) < 1e-12


def test_x_marginal_is_pushforward():
    rng = np.random.default_rng(3)
    cas = random_cascade(3, rng)
    aux = random_aux(3, cas.x_size, rng)
    p = joint(cas, aux)
    px = p.sum(axis=(0, 1, 3, 4, 5))
    assert np.allclose(px, aux.marginal(3), atol=1e-12)


def test_noiseless_degenerate_atoms():
    aux = AuxChain.degenerate(3, [0.5, 0.5])
    t = atoms_from_channel(ChannelCascade.identity(3), aux)
    for m in range(1, 4):
        assert abs(t[3, m] - 1) < 1e-12
        assert abs(t[1, m]) < 1e-12 and abs(t[2, m]) < 1e-12


def test_single_bsc_mutual_information():
    aux = AuxChain.build([[0.5, 0.5], np.eye(2)])
    cas = ChannelCascade.build(2, [bsc(0.1), np.eye(2)])
    t = atoms_from_channel(cas, aux)
    assert abs(compound(t, 0, 2, 2) - (1 - h2(0.1))) < 1e-12
    assert abs(1 - h2(0.1) - 0.5310) < 1e-4


def test_useless_weakest_receiver():
    rng = np.random.default_rng(0)
    cas = ChannelCascade.build(2, [np.eye(2), bsc(0.3), bsc(0.5)])
    aux = random_aux(3, 2, rng)
    t = atoms_from_channel(cas, aux)
    assert all(abs(t[j, 1]) < 1e-12 for j in range(1, 4))


def test_validate_cascade():
    assert validate_cascade(ChannelCascade.identity(3)) == []
    with pytest.raises(ValueError, match="sums to"):
        ChannelCascade.build(2, [[[0.9, 0.0], [0.0, 1.0]]])
    with pytest.raises(ValueError, match="rows"):
        ChannelCascade.build(3, [np.eye(2)])
    rng = np.random.default_rng(9)
    for _ in range(5):
        assert validate_cascade(random_cascade(4, rng)) == []


def test_aux_chain_checks():
    with pytest.raises(ValueError):
        AuxChain.build([[0.5, 0.4], np.eye(2)])
    with pytest.raises(ValueError):
        joint(ChannelCascade.identity(3), AuxChain.build([[1.0], [[1.0, 0.0]]]))


def test_channel_json_roundtrip():
    rng = np.random.default_rng(1)
    cas = random_cascade(3, rng)
    aux = random_aux(3, cas.x_size, rng)
    data = dict(cas.to_json(), aux=aux.to_json())
    data = json.loads(json.dumps(data))
    assert data["hops"][0]["to"] == "Y3"
    c2, a2 = load_channel_spec(data)
    assert all(np.array_equal(x, y) for x, y in zip(c2.hops, cas.hops))
    assert all(np.array_equal(x, y) for x, y in zip(a2.dists, aux.dists))
    bad = dict(data)
    bad["hops"] = list(reversed(data["hops"]))
    with pytest.raises(ValueError):
        load_channel_spec(bad)


def test_default_aux_sizes():
    rng = np.random.default_rng(2)
    aux = random_aux(4, 3, rng)
    assert aux.sizes == (3, 3, 3)


@given(st.integers(0, 10 ** 6), st.integers(2, 4))
def test_atoms_match_joint_oracle(seed, K):
    rng = np.random.default_rng(seed)
    cas = random_cascade(K, rng)
    aux = random_aux(K, cas.x_size, rng,
                     sizes=rng.integers(1, 4, size=K - 1).tolist())
    t = atoms_from_channel(cas, aux)
    assert validate(t, tol=1e-9) is None
    p = joint(cas, aux)
    assert abs(p.sum() - 1) < 1e-12
    for l, k, m in all_compound_pairs(K):
        assert abs(compound(t, l, k, m) - direct_cmi(p, K, l, k, m)) < 1e-9
