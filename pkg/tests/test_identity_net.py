import pytest

from ccom.identity_net import (DelayViolation, KeyRegistry, Network, NetworkConfig, SignedMessage,
                               effective_alpha, max_alpha, sign, verify_sig)


@pytest.fixture
def registry():
    return KeyRegistry(b"s" * 32)


def test_sign_then_verify(registry):
    ident = registry.new_identity(True)
    assert verify_sig(sign(ident, b"hello"), registry)


def test_flipped_byte_fails(registry):
    msg = sign(registry.new_identity(True), b"hello")
    forged = SignedMessage(b"hellp", msg.signature, msg.sender_key)
    assert not verify_sig(forged, registry)


def test_replay_still_verifies(registry):
    msg = sign(registry.new_identity(True), b"depart")
    replay = SignedMessage(msg.payload, msg.signature, msg.sender_key)
    assert verify_sig(replay, registry)


def test_key_ranges_do_not_overlap(registry):
    a = registry.new_keys(5)
    b = registry.new_key()
    c = registry.new_keys(3)
    assert list(a) == [1, 2, 3, 4, 5] and b == 6 and list(c) == [7, 8, 9]
    assert registry.issued == 9


def test_zero_delay_delivers_same_round(registry):
    net = Network(NetworkConfig(delta=0), live_good=lambda: [1, 2, 3])
    net.diffuse(registry.new_identity(True), sign(registry.new_identity(True), b"x"), now=4)
    got = net.deliver(4)
    assert sorted(e.recipient for e in got) == [1, 2, 3]
    assert net.pending() == 0


def test_maximal_delay_arrives_at_t_plus_delta(registry):
    net = Network(NetworkConfig(delta=2), live_good=lambda: [1])
    net.delay_fn = lambda m, r: 2
    net.diffuse(registry.new_identity(False), sign(registry.new_identity(False), b"x"), now=10)
    assert net.deliver(11) == []
    assert [e.deliver_round for e in net.deliver(12)] == [12]
    assert net.max_lateness == 2


def test_delay_beyond_bound_rejected(registry):
    net = Network(NetworkConfig(delta=1), live_good=lambda: [1])
    net.delay_fn = lambda m, r: 2
    with pytest.raises(DelayViolation):
        net.diffuse(registry.new_identity(False), sign(registry.new_identity(False), b"x"), now=0)


def test_good_bandwidth_counts_calls(registry):
    net = Network(NetworkConfig(), live_good=lambda: [1, 2])
    good = registry.new_identity(True)
    for _ in range(7):
        net.diffuse(good, sign(good, b"m"), now=0)
    assert net.good_diffuse_calls == 7 and net.bad_diffuse_calls == 0


def test_epsilon0_bound():
    with pytest.raises(ValueError):
        NetworkConfig(epsilon0=0.05)


def test_effective_alpha_values():
    assert effective_alpha(1 / 6, 0) == pytest.approx(1 / 6)
    assert effective_alpha(1 / 6, 1) == pytest.approx((1 / 3 + 1 / 6) / (1 / 3 + 1))
    assert effective_alpha(1 / 6, 1) == pytest.approx(0.375)
    assert effective_alpha(1 / 16, 1) <= 1 / 6 + 1e-12


def test_max_alpha():
    assert max_alpha(0) == pytest.approx(1 / 6)
    assert max_alpha(1) == pytest.approx(1 / 16)
