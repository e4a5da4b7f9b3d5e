#pragma once

#include "citadel/ledger.hpp"

namespace citadel {

// Public identity handed to counterparties: note-addressing keys plus the
// license verification key, hex-encoded as three concatenated points.
struct Address {
    PublicKey pk;
    GroupElement lic_pk;

    std::string encode() const {
        Bytes all;
        auto put = [&](const Bytes32& b) { all.insert(all.end(), b.begin(), b.end()); };
        put(pk.a.encode());
        put(pk.b.encode());
        put(lic_pk.encode());
        return to_hex(all);
    }

    static std::optional<Address> decode(std::string_view hex) {
        auto raw = from_hex(hex);
        if (!raw || raw->size() != 96) return std::nullopt;
        auto a = GroupElement::decode(std::span(*raw).subspan(0, 32));
        auto b = GroupElement::decode(std::span(*raw).subspan(32, 32));
        auto lic = GroupElement::decode(std::span(*raw).subspan(64, 32));
        if (!a || !b || !lic) return std::nullopt;
        if (a->is_identity() || b->is_identity() || lic->is_identity()) return std::nullopt;
        return Address{{*a, *b}, *lic};
    }
};

struct OwnedNote {
    Note note;
    uint64_t pos = 0;
    NoteSecretKey nsk;
    NoteOpening opening;
    bool spent = false;
};

// Client-side state: static keys, the scan cache, and everything needed to
// spend. The cache is always reconstructible from a full rescan. Every
// wallet carries license-signing keys, so any wallet can act as a service
// provider.
class Wallet {
public:
    StaticKeys keys;
    Scalar lic_sk;
    GroupElement lic_pk;
    std::vector<OwnedNote> notes;
    std::vector<FetchedLicense> licenses;
    std::vector<std::pair<LicenseRequest, uint64_t>> requests;  // SP inbox
    uint64_t scan_height = 0;
    NonceRegistry nonces;

    static Wallet create(Rng& rng) {
        Wallet w;
        w.keys = gen_static_keys(rng);
        w.lic_sk = Scalar::random_nonzero(rng);
        w.lic_pk = mul_gen(w.lic_sk);
        return w;
    }

    Address address() const { return {keys.pk, lic_pk}; }
    SpKeys sp_keys() const { return {keys, lic_sk, lic_pk}; }

    // Incremental scan from the last synced height, then refresh spent
    // flags against the nullifier set.
    void sync(const Ledger& ledger) {
        for (const auto& [note, pos] : ledger.scan(view_key(keys), scan_height)) {
            ingest(note, pos);
        }
        scan_height = ledger.height();
        for (auto& on : notes) {
            on.spent = ledger.nullifier_spent(compute_nullifier(on.nsk, on.pos).value);
        }
    }

    void rescan(const Ledger& ledger) {
        notes.clear();
        licenses.clear();
        requests.clear();
        scan_height = 0;
        sync(ledger);
    }

    Scalar balance() const {
        Scalar sum = Scalar::zero();
        for (const auto& on : notes) {
            if (!on.spent) sum += on.opening.v;
        }
        return sum;
    }

    struct Funding {
        std::vector<SpendInput> spends;
        Scalar change;  // value left over after the target amount
    };

    // Greedy coin selection over unspent notes until the target is covered.
    Funding fund(const Scalar& total, const Ledger& ledger) const {
        Funding f;
        Scalar acc = Scalar::zero();
        unsigned __int128 target = require_u64(total, "funding target");
        unsigned __int128 got = 0;
        for (const auto& on : notes) {
            if (on.spent) continue;
            if (got >= target) break;
            f.spends.push_back({on.note, on.nsk, on.opening, ledger.prove_note(on.pos)});
            acc += on.opening.v;
            got += require_u64(on.opening.v, "note value");
        }
        if (got < target) throw Error("insufficient-funds", "balance does not cover amount");
        f.change = acc - total;
        return f;
    }

    Transaction pay(const PublicKey& to, const Scalar& amount, bool obfuscated,
                    const Ledger& ledger, TxProofBackend& backend, Rng& rng) {
        Funding f = fund(amount + ledger.gas_fee(), ledger);
        std::vector<MintInstruction> mints;
        mints.push_back(ValueMint{to, amount, obfuscated});
        append_change(mints, f.change);
        return build_transaction(f.spends, mints, ledger.gas_fee(), std::nullopt,
                                 ledger.notes().root(), backend, nonces, rng);
    }

    LicenseRequestResult request_license(const PublicKey& sp_note_pk, const Scalar& price,
                                         const Ledger& ledger, TxProofBackend& backend,
                                         Rng& rng) {
        Funding f = fund(price + ledger.gas_fee(), ledger);
        std::vector<MintInstruction> change;
        append_change(change, f.change);
        return send_license_request(keys, sp_note_pk, price, f.spends, change,
                                    ledger.gas_fee(), ledger.notes().root(), backend, nonces,
                                    rng);
    }

    // SP side: answer the request at the given inbox position.
    Transaction issue_license_for(const LicenseRequest& req, const Scalar& attr,
                                  const Ledger& ledger, TxProofBackend& backend, Rng& rng) {
        Funding f = fund(ledger.gas_fee(), ledger);
        std::vector<MintInstruction> change;
        append_change(change, f.change);
        return issue_license(sp_keys(), req, attr, f.spends, change, ledger.gas_fee(),
                             ledger.notes().root(), backend, nonces, rng);
    }

    const FetchedLicense* license_at(uint64_t pos) const {
        for (const auto& lic : licenses) {
            if (lic.pos == pos) return &lic;
        }
        return nullptr;
    }

    LicenseUseResult use_license_at(uint64_t license_pos, const GroupElement& sp_lic_pk,
                                    const Scalar& c, const PublicKey& sp_note_pk,
                                    const Ledger& ledger, TxProofBackend& backend,
                                    LicenseProofBackend& lic_backend, Rng& rng) {
        const FetchedLicense* lic = license_at(license_pos);
        if (!lic) throw Error("unknown-license", "no cached license at this position");
        Funding f = fund(ledger.gas_fee(), ledger);
        std::vector<MintInstruction> change;
        append_change(change, f.change);
        return use_license(keys, lic->note, lic->payload, ledger.prove_note(license_pos),
                           sp_lic_pk, c, sp_note_pk, f.spends, change, ledger.gas_fee(),
                           ledger.notes().root(), backend, lic_backend, nonces, rng);
    }

    void serialize(ByteWriter& w) const {
        w.raw(keys.a.to_bytes());
        w.raw(keys.b.to_bytes());
        w.raw(lic_sk.to_bytes());
        w.u32(static_cast<uint32_t>(notes.size()));
        for (const auto& on : notes) {
            on.note.serialize(w);
            w.u64(on.pos);
            w.raw(on.nsk.nsk.to_bytes());
            w.raw(on.nsk.npk_prime.encode());
            w.raw(on.opening.v.to_bytes());
            w.raw(on.opening.s.to_bytes());
            w.u8(on.spent ? 1 : 0);
        }
        w.u32(static_cast<uint32_t>(licenses.size()));
        for (const auto& lic : licenses) {
            lic.note.serialize(w);
            w.raw(lic.payload.sig_lic.r.encode());
            w.raw(lic.payload.sig_lic.u.to_bytes());
            w.raw(lic.payload.attr.to_bytes());
            w.u64(lic.pos);
        }
        w.u32(static_cast<uint32_t>(requests.size()));
        for (const auto& [req, pos] : requests) {
            w.raw(req.npk_user.encode());
            w.raw(req.r_user.encode());
            w.raw(req.k_user.to_bytes());
            w.u64(pos);
        }
        w.u64(scan_height);
        w.u32(static_cast<uint32_t>(nonces.entries().size()));
        for (const auto& n : nonces.entries()) w.raw(n.to_bytes());
    }

    static Wallet deserialize(ByteReader& rd) {
        Wallet w;
        Scalar a = TxStatement::read_scalar(rd);
        Scalar b = TxStatement::read_scalar(rd);
        w.keys = {a, b, {mul_gen(a), mul_gen(b)}};
        w.lic_sk = TxStatement::read_scalar(rd);
        w.lic_pk = mul_gen(w.lic_sk);
        uint32_t n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            OwnedNote on;
            on.note = Note::deserialize(rd);
            on.pos = rd.u64();
            on.nsk.nsk = TxStatement::read_scalar(rd);
            on.nsk.npk_prime = TxWitness::read_point(rd);
            on.opening.v = TxStatement::read_scalar(rd);
            on.opening.s = TxStatement::read_scalar(rd);
            on.spent = rd.u8() != 0;
            w.notes.push_back(std::move(on));
        }
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            FetchedLicense lic;
            lic.note = Note::deserialize(rd);
            lic.payload.sig_lic.r = TxWitness::read_point(rd);
            lic.payload.sig_lic.u = TxStatement::read_scalar(rd);
            lic.payload.attr = TxStatement::read_scalar(rd);
            lic.pos = rd.u64();
            w.licenses.push_back(std::move(lic));
        }
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            LicenseRequest req;
            req.npk_user = TxWitness::read_point(rd);
            req.r_user = TxWitness::read_point(rd);
            req.k_user = TxStatement::read_scalar(rd);
            uint64_t pos = rd.u64();
            w.requests.emplace_back(req, pos);
        }
        w.scan_height = rd.u64();
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) w.nonces.claim(TxStatement::read_scalar(rd));
        return w;
    }

    // Encrypted at rest: argon2id passphrase stretching, then secretbox.
    void save(const std::string& path, const std::string& passphrase) const {
        sodium_ready();
        ByteWriter w;
        serialize(w);
        Bytes payload = w.take();

        uint8_t salt[crypto_pwhash_SALTBYTES];
        randombytes_buf(salt, sizeof salt);
        Bytes32 key = stretch(passphrase, salt);
        uint8_t nonce[crypto_secretbox_NONCEBYTES];
        randombytes_buf(nonce, sizeof nonce);
        Bytes ct(payload.size() + crypto_secretbox_MACBYTES);
        crypto_secretbox_easy(ct.data(), payload.data(), payload.size(), nonce, key.data());

        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("io", "cannot open wallet file for writing");
        f.write("CWL1", 4);
        char ver = 1;
        f.write(&ver, 1);
        f.write(reinterpret_cast<const char*>(salt), sizeof salt);
        f.write(reinterpret_cast<const char*>(nonce), sizeof nonce);
        f.write(reinterpret_cast<const char*>(ct.data()), ct.size());
        if (!f) throw Error("io", "short write to wallet file");
    }

    static Wallet load(const std::string& path, const std::string& passphrase) {
        sodium_ready();
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error("io", "cannot open wallet file");
        Bytes blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        size_t header = 4 + 1 + crypto_pwhash_SALTBYTES + crypto_secretbox_NONCEBYTES;
        if (blob.size() < header + crypto_secretbox_MACBYTES)
            throw Error("corrupt", "wallet file too short");
        if (std::string(blob.begin(), blob.begin() + 4) != "CWL1")
            throw Error("corrupt", "bad wallet magic");
        if (blob[4] != 1) throw Error("version", "unsupported wallet version");
        const uint8_t* salt = blob.data() + 5;
        const uint8_t* nonce = salt + crypto_pwhash_SALTBYTES;
        Bytes32 key = stretch(passphrase, salt);
        Bytes payload(blob.size() - header - crypto_secretbox_MACBYTES);
        if (crypto_secretbox_open_easy(payload.data(), blob.data() + header,
                                       blob.size() - header, nonce, key.data()) != 0) {
            throw Error("passphrase", "wallet decryption failed");
        }
        ByteReader rd(payload);
        Wallet w = deserialize(rd);
        if (!rd.done()) throw Error("corrupt", "trailing bytes in wallet file");
        return w;
    }

private:
    void append_change(std::vector<MintInstruction>& mints, const Scalar& change) const {
        if (!change.is_zero()) mints.push_back(ValueMint{keys.pk, change, true});
    }

    static uint64_t require_u64(const Scalar& v, const char* what) {
        auto u = v.to_u64();
        if (!u) throw Error("range", std::string(what) + " out of range");
        return *u;
    }

    void ingest(const Note& note, uint64_t pos) {
        auto nsk = recover_note_secret(keys, note.npk, note.r);
        if (!nsk) return;
        if (is_value_type(note.type)) {
            GroupElement k_dh = note.r.mul(keys.a);
            auto opening = recover_value_opening(note, k_dh);
            if (opening) notes.push_back({note, pos, *nsk, *opening, false});
            return;
        }
        if (note.type != NoteType::ObfuscatedNft) return;
        Scalar k_user = derive_k_user(note.npk, nsk->nsk);
        if (auto scalars = recover_nft_payload(note, SymKey::from_scalar(k_user))) {
            if (auto payload = LicensePayload::from_payload(*scalars)) {
                licenses.push_back({note, *payload, pos});
                return;
            }
        }
        GroupElement k_dh = note.r.mul(keys.a);
        if (auto scalars = recover_nft_payload(note, derive_symmetric_key(k_dh))) {
            if (auto req = LicenseRequest::from_payload(*scalars)) {
                requests.emplace_back(*req, pos);
            }
        }
    }

    static Bytes32 stretch(const std::string& passphrase, const uint8_t* salt) {
        Bytes32 key;
        if (crypto_pwhash(key.data(), key.size(), passphrase.data(), passphrase.size(), salt,
                          crypto_pwhash_OPSLIMIT_INTERACTIVE,
                          crypto_pwhash_MEMLIMIT_INTERACTIVE,
                          crypto_pwhash_ALG_ARGON2ID13) != 0) {
            throw Error("io", "passphrase stretching failed");
        }
        return key;
    }
};

}  // namespace citadel
