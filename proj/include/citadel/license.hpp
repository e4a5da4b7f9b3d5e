#pragma once

#include <functional>

#include "citadel/transaction.hpp"

namespace citadel {

// A 32-byte point encoding does not fit one 252-bit scalar, so points ride
// inside NFT payloads as two 16-byte halves.
inline std::pair<Scalar, Scalar> pack_point(const GroupElement& p) {
    auto enc = p.encode();
    Bytes32 lo{}, hi{};
    std::copy_n(enc.begin(), 16, lo.begin());
    std::copy_n(enc.begin() + 16, 16, hi.begin());
    return {*Scalar::from_bytes(lo), *Scalar::from_bytes(hi)};
}

inline std::optional<GroupElement> unpack_point(const Scalar& lo, const Scalar& hi) {
    auto lb = lo.to_bytes(), hb = hi.to_bytes();
    Bytes32 enc;
    for (int i = 16; i < 32; i++) {
        if (lb[i] || hb[i]) return std::nullopt;
    }
    std::copy_n(lb.begin(), 16, enc.begin());
    std::copy_n(hb.begin(), 16, enc.begin() + 16);
    return GroupElement::decode(enc);
}

// Service provider identity: one keypair for receiving notes, a separate
// Schnorr keypair for signing licenses. The two roles need different key
// shapes, so they are not overloaded onto one.
struct SpKeys {
    StaticKeys note_keys;
    Scalar lic_sk;
    GroupElement lic_pk;
};

inline SpKeys gen_sp_keys(Rng& rng) {
    Scalar lic_sk = Scalar::random_nonzero(rng);
    return {gen_static_keys(rng), lic_sk, mul_gen(lic_sk)};
}

// What the user sends the SP inside an obfuscated NFT: the one-time key the
// license should be minted to, and a symmetric key only the user can also
// derive (it commits to nsk_user).
struct LicenseRequest {
    GroupElement npk_user;
    GroupElement r_user;
    Scalar k_user;

    std::vector<Scalar> to_payload() const {
        auto [nlo, nhi] = pack_point(npk_user);
        auto [rlo, rhi] = pack_point(r_user);
        return {nlo, nhi, rlo, rhi, k_user};
    }

    static std::optional<LicenseRequest> from_payload(std::span<const Scalar> p) {
        if (p.size() != 5) return std::nullopt;
        auto npk = unpack_point(p[0], p[1]);
        auto r = unpack_point(p[2], p[3]);
        if (!npk || !r || npk->is_identity() || r->is_identity()) return std::nullopt;
        return LicenseRequest{*npk, *r, p[4]};
    }
};

inline Scalar derive_k_user(const GroupElement& npk_user, const Scalar& nsk_user) {
    return hash_sponge(npk_user, nsk_user);
}

// License content: the SP's signature over (npk_user, attr), plus attr.
struct LicensePayload {
    Signature sig_lic;
    Scalar attr;

    std::vector<Scalar> to_payload() const {
        auto [rlo, rhi] = pack_point(sig_lic.r);
        return {rlo, rhi, sig_lic.u, attr};
    }

    static std::optional<LicensePayload> from_payload(std::span<const Scalar> p) {
        if (p.size() != 4) return std::nullopt;
        auto r = unpack_point(p[0], p[1]);
        if (!r) return std::nullopt;
        return LicensePayload{{*r, p[2]}, p[3]};
    }
};

inline Scalar license_message(const GroupElement& npk_user, const Scalar& attr) {
    return hash_sponge(npk_user, attr);
}

// Per-use blinding randomness. Revealed off-chain to the SP, never reused.
struct SessionCookie {
    Scalar s0, s1, s2;

    bool operator==(const SessionCookie& o) const {
        return s0 == o.s0 && s1 == o.s1 && s2 == o.s2;
    }
};

// Public inputs of the license relation. Everything here is one-time: the
// commitments blind the SP key, attributes, and challenge behind fresh
// session randomness.
struct LicenseStatement {
    Scalar notes_root;
    Scalar nullifier_lic;
    Scalar com0;
    GroupElement com1;
    GroupElement com2;
    Scalar tx_hash;

    void serialize(ByteWriter& w) const {
        w.raw(notes_root.to_bytes());
        w.raw(nullifier_lic.to_bytes());
        w.raw(com0.to_bytes());
        w.raw(com1.encode());
        w.raw(com2.encode());
        w.raw(tx_hash.to_bytes());
    }

    static LicenseStatement deserialize(ByteReader& rd) {
        LicenseStatement st;
        st.notes_root = TxStatement::read_scalar(rd);
        st.nullifier_lic = TxStatement::read_scalar(rd);
        st.com0 = TxStatement::read_scalar(rd);
        st.com1 = TxWitness::read_point(rd);
        st.com2 = TxWitness::read_point(rd);
        st.tx_hash = TxStatement::read_scalar(rd);
        return st;
    }
};

struct LicenseWitness {
    Note license_note;
    MerkleProof merkle_proof;
    GroupElement npk_user;
    GroupElement npk_prime_user;
    DoubleSignature sig_tx;  // over tx_hash, proves ownership of npk_user
    Signature sig_lic;
    Scalar attr;
    Scalar c;
    GroupElement lic_pk;
    SessionCookie sc;

    void serialize(ByteWriter& w) const {
        license_note.serialize(w);
        merkle_proof.serialize(w);
        w.raw(npk_user.encode());
        w.raw(npk_prime_user.encode());
        w.raw(sig_tx.r.encode());
        w.raw(sig_tx.r_prime.encode());
        w.raw(sig_tx.u.to_bytes());
        w.raw(sig_lic.r.encode());
        w.raw(sig_lic.u.to_bytes());
        w.raw(attr.to_bytes());
        w.raw(c.to_bytes());
        w.raw(lic_pk.encode());
        w.raw(sc.s0.to_bytes());
        w.raw(sc.s1.to_bytes());
        w.raw(sc.s2.to_bytes());
    }

    static LicenseWitness deserialize(ByteReader& rd) {
        LicenseWitness wit;
        wit.license_note = Note::deserialize(rd);
        wit.merkle_proof = MerkleProof::deserialize(rd);
        wit.npk_user = TxWitness::read_point(rd);
        wit.npk_prime_user = TxWitness::read_point(rd);
        wit.sig_tx.r = TxWitness::read_point(rd);
        wit.sig_tx.r_prime = TxWitness::read_point(rd);
        wit.sig_tx.u = TxStatement::read_scalar(rd);
        wit.sig_lic.r = TxWitness::read_point(rd);
        wit.sig_lic.u = TxStatement::read_scalar(rd);
        wit.attr = TxStatement::read_scalar(rd);
        wit.c = TxStatement::read_scalar(rd);
        wit.lic_pk = TxWitness::read_point(rd);
        wit.sc.s0 = TxStatement::read_scalar(rd);
        wit.sc.s1 = TxStatement::read_scalar(rd);
        wit.sc.s2 = TxStatement::read_scalar(rd);
        return wit;
    }
};

// The license relation, clause by clause:
//   lic-sig       the SP signed (npk_user, attr)
//   ownership     prover controls npk_user (double signature over tx_hash)
//   membership    the license note is in the tree and belongs to npk_user
//   nullification nullifier_lic = hash(npk'_user, c)
//   com0/com1/com2  the blinded SP key, attr, and challenge open correctly
inline RelationResult check_license_relation(const LicenseStatement& st,
                                             const LicenseWitness& wit) {
    if (!verify_single(wit.lic_pk, license_message(wit.npk_user, wit.attr), wit.sig_lic)) {
        return RelationResult::reject("lic-sig");
    }
    if (!verify_double(wit.npk_user, wit.npk_prime_user, st.tx_hash, wit.sig_tx)) {
        return RelationResult::reject("ownership");
    }
    if (!wit.license_note.pos || wit.merkle_proof.pos != *wit.license_note.pos ||
        wit.merkle_proof.leaf != note_hash(wit.license_note) ||
        wit.license_note.npk != wit.npk_user ||
        !merkle_verify(st.notes_root, wit.merkle_proof)) {
        return RelationResult::reject("membership");
    }
    if (st.nullifier_lic != hash_sponge(wit.npk_prime_user, wit.c)) {
        return RelationResult::reject("nullification");
    }
    if (st.com0 != hash_sponge(wit.lic_pk, wit.sc.s0)) {
        return RelationResult::reject("com0");
    }
    if (!open(default_commit_key(), wit.attr, wit.sc.s1, st.com1)) {
        return RelationResult::reject("com1");
    }
    if (!open(default_commit_key(), wit.c, wit.sc.s2, st.com2)) {
        return RelationResult::reject("com2");
    }
    return RelationResult::accept();
}

class LicenseProofBackend {
public:
    virtual ~LicenseProofBackend() = default;
    virtual Bytes prove_license(const LicenseStatement& st, const LicenseWitness& wit) = 0;
    virtual RelationResult verify_license(const LicenseStatement& st, const Bytes& proof) = 0;
};

// Contract-call body for a license use. tx_hash is deliberately absent: it
// is the hash of the enclosing transaction, so the ledger injects it when
// reconstructing the statement.
struct LicenseCallBody {
    Scalar notes_root;
    Scalar nullifier_lic;
    Scalar com0;
    GroupElement com1;
    GroupElement com2;
    Note sc_note;

    Bytes serialize() const {
        ByteWriter w;
        w.raw(notes_root.to_bytes());
        w.raw(nullifier_lic.to_bytes());
        w.raw(com0.to_bytes());
        w.raw(com1.encode());
        w.raw(com2.encode());
        sc_note.serialize(w);
        return w.take();
    }

    static LicenseCallBody deserialize(const Bytes& body) {
        ByteReader rd(body);
        LicenseCallBody b;
        b.notes_root = TxStatement::read_scalar(rd);
        b.nullifier_lic = TxStatement::read_scalar(rd);
        b.com0 = TxStatement::read_scalar(rd);
        b.com1 = TxWitness::read_point(rd);
        b.com2 = TxWitness::read_point(rd);
        b.sc_note = Note::deserialize(rd);
        if (!rd.done()) throw Error("decode", "trailing bytes in license call body");
        return b;
    }

    LicenseStatement statement(const Scalar& tx_hash) const {
        return {notes_root, nullifier_lic, com0, com1, com2, tx_hash};
    }
};

// Step 1: pay the SP and attach an obfuscated NFT whose payload is the
// LicenseRequest. Funding spends and any change mint come from the wallet;
// the payment note and the request NFT are added here.
struct LicenseRequestResult {
    Transaction tx;
    LicenseRequest request;
};

inline LicenseRequestResult send_license_request(
    const StaticKeys& user, const PublicKey& sp_note_pk, const Scalar& price,
    std::span<const SpendInput> funding, std::span<const MintInstruction> change,
    const Scalar& gas, const Scalar& notes_root, TxProofBackend& backend,
    NonceRegistry& nonces, Rng& rng) {
    // fresh one-time key the license will be addressed to
    auto [user_nkp, r_eph] = gen_note_keypair(user.pk, rng);
    (void)r_eph;
    auto nsk_user = recover_note_secret(user, user_nkp.npk, user_nkp.r);
    if (!nsk_user) throw Error("mismatch", "one-time key not recoverable");

    LicenseRequest req{user_nkp.npk, user_nkp.r, derive_k_user(user_nkp.npk, nsk_user->nsk)};

    // NFT to the SP carrying the request, encrypted under a fresh DH key
    auto [sp_nkp, sp_eph] = gen_note_keypair(sp_note_pk, rng);
    (void)sp_eph;
    std::vector<MintInstruction> mints;
    mints.push_back(ValueMint{sp_note_pk, price, true});
    mints.push_back(NftMint{sp_nkp.npk, sp_nkp.r, derive_symmetric_key(sp_nkp.k_dh),
                            req.to_payload(), true, std::nullopt});
    mints.insert(mints.end(), change.begin(), change.end());

    Transaction tx = build_transaction(funding, mints, gas, std::nullopt, notes_root,
                                       backend, nonces, rng);
    return {std::move(tx), req};
}

// Steps 2-3: sign the user's one-time key together with the attributes and
// mint the license NFT back to that key, encrypted under k_user.
inline Transaction issue_license(const SpKeys& sp, const LicenseRequest& req,
                                 const Scalar& attr, std::span<const SpendInput> funding,
                                 std::span<const MintInstruction> change, const Scalar& gas,
                                 const Scalar& notes_root, TxProofBackend& backend,
                                 NonceRegistry& nonces, Rng& rng) {
    if (req.npk_user.is_identity() || req.r_user.is_identity()) {
        throw Error("malformed-request", "request carries an identity point");
    }
    Signature sig_lic = sign_single(sp.lic_sk, license_message(req.npk_user, attr), rng);
    LicensePayload payload{sig_lic, attr};

    std::vector<MintInstruction> mints;
    mints.push_back(NftMint{req.npk_user, req.r_user, SymKey::from_scalar(req.k_user),
                            payload.to_payload(), true, std::nullopt});
    mints.insert(mints.end(), change.begin(), change.end());
    return build_transaction(funding, mints, gas, std::nullopt, notes_root, backend, nonces,
                             rng);
}

// Step 4: recover license payloads from scanned notes. Scanning itself only
// needs the view key; decryption requires the static secret (k_user derives
// from nsk).
struct FetchedLicense {
    Note note;
    LicensePayload payload;
    uint64_t pos = 0;
};

inline std::vector<FetchedLicense> fetch_licenses(
    const StaticKeys& user, std::span<const std::pair<Note, uint64_t>> scanned) {
    std::vector<FetchedLicense> out;
    for (const auto& [note, pos] : scanned) {
        if (note.type != NoteType::ObfuscatedNft) continue;
        auto nsk = recover_note_secret(user, note.npk, note.r);
        if (!nsk) continue;
        Scalar k_user = derive_k_user(note.npk, nsk->nsk);
        auto scalars = recover_nft_payload(note, SymKey::from_scalar(k_user));
        if (!scalars) continue;
        auto payload = LicensePayload::from_payload(*scalars);
        if (!payload) continue;
        out.push_back({note, *payload, pos});
    }
    return out;
}

// Step 5 output: the fee transaction embedding the contract call, plus the
// session cookie the user later reveals to the SP off-chain.
struct LicenseUseResult {
    Transaction tx;
    SessionCookie sc;
    LicenseStatement statement;
};

inline LicenseUseResult use_license(const StaticKeys& user, const Note& license_note,
                                    const LicensePayload& payload,
                                    const MerkleProof& license_proof,
                                    const GroupElement& lic_pk, const Scalar& c,
                                    const PublicKey& sp_note_pk,
                                    std::span<const SpendInput> funding,
                                    std::span<const MintInstruction> change,
                                    const Scalar& gas, const Scalar& notes_root,
                                    TxProofBackend& tx_backend,
                                    LicenseProofBackend& lic_backend, NonceRegistry& nonces,
                                    Rng& rng) {
    if (!license_note.pos) throw Error("pos", "license note has no ledger position");
    if (license_proof.leaf != note_hash(license_note)) {
        throw Error("revoked", "license leaf no longer matches the note");
    }
    auto nsk_user = recover_note_secret(user, license_note.npk, license_note.r);
    if (!nsk_user) throw Error("mismatch", "license note is not addressed to these keys");

    SessionCookie sc{Scalar::random_nonzero(rng), Scalar::random_nonzero(rng),
                     Scalar::random_nonzero(rng)};
    LicenseCallBody body;
    body.notes_root = notes_root;
    body.nullifier_lic = hash_sponge(nsk_user->npk_prime, c);
    body.com0 = hash_sponge(lic_pk, sc.s0);
    body.com1 = commit(default_commit_key(), payload.attr, sc.s1);
    body.com2 = commit(default_commit_key(), c, sc.s2);

    // session cookie travels to the SP inside an obfuscated NFT
    auto [sp_nkp, sp_eph] = gen_note_keypair(sp_note_pk, rng);
    (void)sp_eph;
    std::array<Scalar, 3> sc_payload{sc.s0, sc.s1, sc.s2};
    body.sc_note = mint_nft(sp_nkp.npk, sp_nkp.r, sc_payload,
                            derive_symmetric_key(sp_nkp.k_dh), true, Scalar::random(rng),
                            nonces);

    ContractCall cc{CONTRACT_KIND_LICENSE, body.serialize(), {}};
    Transaction tx = build_transaction(funding, change, gas, cc, notes_root, tx_backend,
                                       nonces, rng);

    LicenseStatement st = body.statement(tx.tx_hash);
    LicenseWitness wit;
    wit.license_note = license_note;
    wit.merkle_proof = license_proof;
    wit.npk_user = license_note.npk;
    wit.npk_prime_user = nsk_user->npk_prime;
    wit.sig_tx = sign_double(nsk_user->nsk, tx.tx_hash, rng);
    wit.sig_lic = payload.sig_lic;
    wit.attr = payload.attr;
    wit.c = c;
    wit.lic_pk = lic_pk;
    wit.sc = sc;
    tx.contract_call->proof = lic_backend.prove_license(st, wit);
    return {std::move(tx), sc, st};
}

// Step 7: what travels over the off-chain channel to the SP.
struct ServiceRequest {
    Scalar tx_hash;
    GroupElement lic_pk;
    Scalar attr;
    Scalar c;
    SessionCookie sc;
};

inline ServiceRequest request_service(const Scalar& tx_hash, const GroupElement& lic_pk,
                                      const Scalar& attr, const Scalar& c,
                                      const SessionCookie& sc) {
    return {tx_hash, lic_pk, attr, c, sc};
}

// What the ledger hands the SP about an accepted license call.
struct LicenseCallRecord {
    LicenseStatement statement;
    Note sc_note;  // with assigned pos
};

using ServicePolicy = std::function<bool(const Scalar& attr, const Scalar& c)>;

struct GrantResult {
    bool granted = false;
    std::string reason;  // empty on grant

    static GrantResult grant() { return {true, ""}; }
    static GrantResult deny(std::string reason) { return {false, std::move(reason)}; }
};

// Step 8: verify the off-chain openings against the on-chain statement and
// the sc-NFT the SP received, then apply policy.
inline GrantResult grant_service(const SpKeys& sp, const ServiceRequest& req,
                                 const std::optional<LicenseCallRecord>& record,
                                 const ServicePolicy& policy) {
    if (!record) return GrantResult::deny("unknown-tx");
    if (req.lic_pk != sp.lic_pk) return GrantResult::deny("wrong-sp");
    if (!policy(req.attr, req.c)) return GrantResult::deny("policy");

    const auto& st = record->statement;
    if (st.com0 != hash_sponge(req.lic_pk, req.sc.s0) ||
        !open(default_commit_key(), req.attr, req.sc.s1, st.com1) ||
        !open(default_commit_key(), req.c, req.sc.s2, st.com2)) {
        return GrantResult::deny("opening-mismatch");
    }

    // the sc-NFT must be addressed to the SP and carry the same cookie
    const Note& scn = record->sc_note;
    auto nsk = recover_note_secret(sp.note_keys, scn.npk, scn.r);
    if (!nsk) return GrantResult::deny("sc-note-not-ours");
    GroupElement k_dh = scn.r.mul(sp.note_keys.a);
    auto scalars = recover_nft_payload(scn, derive_symmetric_key(k_dh));
    if (!scalars || scalars->size() != 3) return GrantResult::deny("sc-note-undecodable");
    SessionCookie carried{(*scalars)[0], (*scalars)[1], (*scalars)[2]};
    if (!(carried == req.sc)) return GrantResult::deny("cookie-mismatch");
    return GrantResult::grant();
}

}  // namespace citadel
