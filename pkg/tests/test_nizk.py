import pytest
from hypothesis import given, settings, strategies as st

from tracechain import nizk
from tracechain.elgamal import Ciphertext, encrypt, keygen
from tracechain.errors import InvalidScalar, MalformedProof, WitnessMismatch
from tracechain.group import PRODUCTION, TOY, TOY_101


def statement(group, k, pid=b"P-1", action=nizk.RECEIVE, step=0, seed=b"mfr", addr=3):
    kp = keygen(group, seed)
    ct = encrypt(kp.public, group.encode_address(addr.to_bytes(20, "big")), k)
    return nizk.Statement(ct, kp.public, nizk.make_context(pid, action, step))


def forged(stmt, k_guess, r):
    """A transcript made the honest way but with a guessed witness."""
    group = stmt.group
    t = group.base_mul(r)
    e = nizk.challenge(stmt, t)
    return nizk.Proof(t, e, (r + e * k_guess) % group.order)


# -- context ----------------------------------------------------------------

def test_context_round_trip_and_rejections():
    ctx = nizk.make_context("P-9", nizk.SHIP, 12)
    assert nizk.parse_context(ctx) == (b"P-9", nizk.SHIP, 12)
    with pytest.raises(ValueError):
        nizk.make_context(b"P", b"STEAL", 0)
    for bad in (b"", ctx[:-1], ctx + b"\x00", b"\x00\x00\x00\x09P"):
        with pytest.raises(ValueError):
            nizk.parse_context(bad)


def test_statement_requires_valid_context():
    st_ = statement(PRODUCTION, 5)
    with pytest.raises(ValueError):
        nizk.Statement(st_.ciphertext, st_.manufacturer_q, b"")
    with pytest.raises(TypeError):
        nizk.Statement(st_.ciphertext, TOY.generator, st_.context)


# -- prove / verify ----------------------------------------------------------

@settings(max_examples=40, deadline=None)
@given(st.integers(1, PRODUCTION.order - 1), st.binary(max_size=16), st.integers(0, 2**64 - 1))
def test_completeness(k, nonce_seed, step):
    stmt = statement(PRODUCTION, k, step=step)
    proof = nizk.prove(k, stmt, nonce_seed)
    assert nizk.verify(proof, stmt)
    assert nizk.verify_bytes(proof.to_bytes(), stmt)


def test_prove_rejects_wrong_or_invalid_witness():
    stmt = statement(PRODUCTION, 77)
    with pytest.raises(WitnessMismatch):
        nizk.prove(78, stmt, b"n")
    for k in (0, PRODUCTION.order):
        with pytest.raises(InvalidScalar):
            nizk.prove(k, stmt, b"n")


def test_toy_soundness_sweep_exhaustive():
    k = 4242
    stmt = statement(TOY, k)
    forgeries = 0
    for guess in range(1, TOY.order):
        if guess == k:
            continue
        with pytest.raises(WitnessMismatch):
            nizk.prove(guess, stmt, b"n")
        if nizk.verify(forged(stmt, guess, guess * 31 % TOY.order), stmt):
            forgeries += 1
    assert forgeries == 0
    assert nizk.verify(forged(stmt, k, 5), stmt)


def test_distinct_nonce_seeds_give_distinct_proofs():
    stmt = statement(PRODUCTION, 99)
    a = nizk.prove(99, stmt, b"one")
    b = nizk.prove(99, stmt, b"two")
    assert a != b
    assert nizk.verify(a, stmt) and nizk.verify(b, stmt)
    assert nizk.prove(99, stmt, b"one") == a


def mutations(proof, group):
    g = group.generator
    yield "commitment", nizk.Proof(proof.commitment + g, proof.challenge, proof.response)
    yield "commitment", nizk.Proof(-proof.commitment, proof.challenge, proof.response)
    yield "challenge", nizk.Proof(proof.commitment, (proof.challenge + 1) % group.order,
                                  proof.response)
    yield "challenge", nizk.Proof(proof.commitment, 0, proof.response)
    yield "response", nizk.Proof(proof.commitment, proof.challenge,
                                 (proof.response + 1) % group.order)
    yield "response", nizk.Proof(proof.commitment, proof.challenge,
                                 (proof.response - 1) % group.order)


@pytest.mark.parametrize("group", [PRODUCTION, TOY], ids=lambda g: g.name)
def test_single_field_mutations_fail(group):
    for i in range(20):
        k = group.hash_to_scalar(b"test/k", i)
        stmt = statement(group, k, step=i)
        proof = nizk.prove(k, stmt, bytes([i]))
        for field, bad in mutations(proof, group):
            assert not nizk.verify(bad, stmt), field


def test_byte_flips_never_verify():
    stmt = statement(PRODUCTION, 1234)
    raw = bytearray(nizk.prove(1234, stmt, b"n").to_bytes())
    for i in range(len(raw)):
        for bit in (0x01, 0x80):
            raw[i] ^= bit
            try:
                ok = nizk.verify_bytes(bytes(raw), stmt)
            except MalformedProof:
                ok = False
            raw[i] ^= bit
            assert not ok, (i, bit)


@pytest.mark.parametrize("change", ["context-step", "context-action", "context-product",
                                    "ciphertext", "public-key"])
def test_proof_is_bound_to_statement(change):
    k = 555
    a = statement(PRODUCTION, k, step=3)
    proof = nizk.prove(k, a, b"n")
    if change == "context-step":
        b = nizk.Statement(a.ciphertext, a.manufacturer_q, nizk.make_context(b"P-1", nizk.RECEIVE, 4))
    elif change == "context-action":
        b = nizk.Statement(a.ciphertext, a.manufacturer_q, nizk.make_context(b"P-1", nizk.SHIP, 3))
    elif change == "context-product":
        b = nizk.Statement(a.ciphertext, a.manufacturer_q, nizk.make_context(b"P-2", nizk.RECEIVE, 3))
    elif change == "ciphertext":
        # same C1, different C2: the relation still holds but the hash does not
        ct = Ciphertext(a.ciphertext.c1, a.ciphertext.c2 + PRODUCTION.generator)
        b = nizk.Statement(ct, a.manufacturer_q, a.context)
    else:
        b = nizk.Statement(a.ciphertext, keygen(PRODUCTION, b"other").public, a.context)
    assert nizk.verify(proof, a)
    assert not nizk.verify(proof, b)


def test_malformed_proofs_raise():
    stmt = statement(PRODUCTION, 8)
    proof = nizk.prove(8, stmt, b"n")
    with pytest.raises(MalformedProof):
        nizk.verify(nizk.Proof(TOY.generator, proof.challenge, proof.response), stmt)
    with pytest.raises(MalformedProof):
        nizk.verify(nizk.Proof(proof.commitment, PRODUCTION.order, proof.response), stmt)
    with pytest.raises(MalformedProof):
        nizk.verify(nizk.Proof(proof.commitment, proof.challenge, -1), stmt)
    raw = proof.to_bytes()
    for bad in (b"", raw[:-1], raw + b"\x00", b"\x07" + raw[1:],
                raw[:33] + PRODUCTION.order.to_bytes(32, "big") + raw[65:]):
        with pytest.raises(MalformedProof):
            nizk.Proof.from_bytes(PRODUCTION, bad)


def test_proof_serialization_round_trip():
    stmt = statement(TOY, 10)
    proof = nizk.prove(10, stmt, b"n")
    assert nizk.Proof.from_bytes(TOY, proof.to_bytes()) == proof
    assert len(proof.to_bytes()) == TOY.point_size + 2 * TOY.scalar_size


# -- zero knowledge ----------------------------------------------------------

def test_simulator_satisfies_equation_without_witness():
    stmt = statement(PRODUCTION, 31337)
    sims = [nizk.simulate(stmt, bytes([i])) for i in range(10)]
    assert all(nizk.transcript_holds(p, stmt) for p in sims)
    assert nizk.simulate(stmt, b"\x00") == sims[0]
    assert len({p.to_bytes() for p in sims}) == 10
    # a simulated transcript is not a Fiat-Shamir proof
    assert not any(nizk.verify(p, stmt) for p in sims)


def test_simulated_and_honest_transcript_supports_coincide():
    group = TOY_101
    q = group.order
    k = 23
    stmt = statement(group, k, addr=0)
    c1 = stmt.ciphertext.c1
    mults = [group.base_mul(i) for i in range(q)]
    honest = {(bytes(mults[r]), e, (r + e * k) % q) for r in range(q) for e in range(1, q)}
    simulated = {(bytes(mults[s] - e * c1), e, s) for s in range(q) for e in range(1, q)}
    assert honest == simulated
    assert len(honest) == q * (q - 1)
    for i in range(30):
        p = nizk.simulate(stmt, bytes([i]))
        assert (bytes(p.commitment), p.challenge, p.response) in honest
