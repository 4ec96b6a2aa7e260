import numpy as np
import pytest

from ccom.consensus import (Committee, EmptyCommittee, NoGoodMajority, agree, disseminate_committee,
                            generate_seed, seed_length_bits)


def committee(good, bad, epoch=0):
    members = list(range(1, good + bad + 1))
    return Committee.build(members, set(members[:good]), epoch, 0)


def test_majority_decides():
    c = committee(5, 2)
    proposals = {k: ("v" if k in c.good_members else "w") for k in c.members}
    assert agree(c, proposals) == ("v", 49)


def test_validity_when_all_good_agree():
    c = committee(4, 0)
    assert agree(c, {k: 3 for k in c.members})[0] == 3


def test_no_majority_raises():
    c = committee(4, 4)
    with pytest.raises(NoGoodMajority):
        agree(c, {k: 1 for k in c.members})


def test_majority_edge():
    assert committee(5, 4).has_good_majority()
    assert not committee(4, 4).has_good_majority()


def test_departed_good_members_do_not_count():
    c = committee(5, 4)
    assert not c.has_good_majority(departed=[1])


def test_committee_validation():
    with pytest.raises(EmptyCommittee):
        Committee((), 0, 0)
    with pytest.raises(ValueError):
        Committee((1, 1), 0, 0)
    with pytest.raises(ValueError):
        Committee((1, 2), 0, 0, frozenset({3}))


def test_seed_length():
    assert seed_length_bits(1000, 1) == 74


def test_seeds_are_fresh_and_masked():
    c = committee(3, 0)
    rng = np.random.default_rng(0)
    a, b = generate_seed(c, rng, 74), generate_seed(c, rng, 74)
    assert a != b
    assert len(a) == 10 and a[0] < 4  # 80 bits stored, top 6 cleared


def test_true_roster_wins_with_good_majority():
    out = committee(6, 3)
    d = disseminate_committee([10, 11, 12], out, forged=[99])
    assert d.adopted == (10, 11, 12) and d.agreed
    assert (d.good_diffuse_calls, d.bad_diffuse_calls) == (6, 3)


def test_forged_roster_wins_without_majority():
    out = committee(3, 3)
    d = disseminate_committee([10, 11], out, forged=[99])
    assert d.adopted == (99,) and not d.agreed
