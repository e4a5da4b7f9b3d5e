#pragma once

#include <optional>
#include <set>

#include "citadel/commitment.hpp"
#include "citadel/encrypt.hpp"
#include "citadel/error.hpp"
#include "citadel/keys.hpp"

namespace citadel {

enum class NoteType : uint8_t {
    TransparentValue = 0,
    ObfuscatedValue = 1,
    TransparentNft = 2,
    ObfuscatedNft = 3,
};

inline bool is_value_type(NoteType t) {
    return t == NoteType::TransparentValue || t == NoteType::ObfuscatedValue;
}
inline bool is_nft_type(NoteType t) { return !is_value_type(t); }
inline bool is_obfuscated(NoteType t) {
    return t == NoteType::ObfuscatedValue || t == NoteType::ObfuscatedNft;
}

// UTXO note. Value notes (types 0/1) carry a value commitment; NFT notes
// (types 2/3) carry only a payload. Transparent variants keep enc as
// plaintext scalars with nonce pinned to zero; obfuscated variants carry an
// authenticated ciphertext. pos stays unassigned until ledger inclusion.
struct Note {
    NoteType type = NoteType::TransparentValue;
    std::optional<GroupElement> com;
    std::optional<uint64_t> pos;
    Scalar nonce;
    Bytes enc;
    GroupElement npk;
    GroupElement r;  // R = r_ephemeral * G, published for receiver key recovery

    void serialize(ByteWriter& w) const {
        w.u8(static_cast<uint8_t>(type));
        w.u8(com ? 1 : 0);
        if (com) w.raw(com->encode());
        w.u8(pos ? 1 : 0);
        if (pos) w.u64(*pos);
        w.raw(nonce.to_bytes());
        w.bytes(enc);
        w.raw(npk.encode());
        w.raw(r.encode());
    }

    static Note deserialize(ByteReader& rd) {
        Note n;
        uint8_t t = rd.u8();
        if (t > 3) throw Error("decode", "unknown note type");
        n.type = static_cast<NoteType>(t);
        if (rd.u8()) {
            auto p = GroupElement::decode(rd.take(32));
            if (!p) throw Error("decode", "bad commitment point");
            n.com = *p;
        }
        if (rd.u8()) n.pos = rd.u64();
        auto nonce = Scalar::from_bytes(rd.take(32));
        if (!nonce) throw Error("decode", "non-canonical nonce");
        n.nonce = *nonce;
        n.enc = rd.bytes();
        auto npk = GroupElement::decode(rd.take(32));
        auto r = GroupElement::decode(rd.take(32));
        if (!npk || !r) throw Error("decode", "bad note key point");
        n.npk = *npk;
        n.r = *r;
        return n;
    }
};

struct NoteOpening {
    Scalar v;
    Scalar s;
};

struct Nullifier {
    Scalar value;

    bool operator==(const Nullifier& o) const { return value == o.value; }
    bool operator<(const Nullifier& o) const { return value.less_than(o.value); }
};

inline Bytes encode_scalars(std::span<const Scalar> xs) {
    Bytes out;
    out.reserve(xs.size() * 32);
    for (const auto& x : xs) {
        auto b = x.to_bytes();
        out.insert(out.end(), b.begin(), b.end());
    }
    return out;
}

inline std::optional<std::vector<Scalar>> decode_scalars(const Bytes& data) {
    if (data.size() % 32 != 0) return std::nullopt;
    std::vector<Scalar> out;
    out.reserve(data.size() / 32);
    for (size_t off = 0; off < data.size(); off += 32) {
        auto s = Scalar::from_bytes(std::span(data).subspan(off, 32));
        if (!s) return std::nullopt;
        out.push_back(*s);
    }
    return out;
}

// Value note construction. Transparent notes publish the value with a zero
// blinder; obfuscated notes commit under a fresh blinder and encrypt (v, s)
// to the receiver's note key.
inline std::pair<Note, NoteOpening> mint_value_note(const PublicKey& pk, const Scalar& v,
                                                    bool obfuscated, Rng& rng) {
    if (!v.fits_value_range()) throw Error("range", "note value exceeds the value cap");
    auto [nkp, r_eph] = gen_note_keypair(pk, rng);
    (void)r_eph;
    Note note;
    note.npk = nkp.npk;
    note.r = nkp.r;
    NoteOpening opening;
    opening.v = v;
    if (obfuscated) {
        note.type = NoteType::ObfuscatedValue;
        opening.s = Scalar::random_nonzero(rng);
        note.nonce = Scalar::random(rng);
        SymKey key = derive_symmetric_key(nkp.k_dh);
        std::array<Scalar, 2> pt{v, opening.s};
        note.enc = encrypt(key, pt, note.nonce);
    } else {
        note.type = NoteType::TransparentValue;
        opening.s = Scalar::zero();
        note.nonce = Scalar::zero();
        std::array<Scalar, 1> pt{v};
        note.enc = encode_scalars(pt);
    }
    note.com = commit(default_commit_key(), opening.v, opening.s);
    return {note, opening};
}

// Guards obfuscated-NFT nonce uniqueness: payload keys like k_user are
// long-lived, so a repeated nonce under one of them would break the cipher.
class NonceRegistry {
public:
    bool claim(const Scalar& nonce) { return used_.insert(nonce).second; }
    bool seen(const Scalar& nonce) const { return used_.count(nonce) > 0; }
    const std::set<Scalar, ScalarLess>& entries() const { return used_; }

private:
    std::set<Scalar, ScalarLess> used_;
};

// NFT minting to a caller-supplied note key. The minter never learns the
// receiver's static keys; it only needs (npk, R) and, for the obfuscated
// path, a shared symmetric key.
inline Note mint_nft(const GroupElement& npk, const GroupElement& big_r,
                     std::span<const Scalar> payload, const SymKey& k, bool obfuscated,
                     const Scalar& nonce, NonceRegistry& nonces) {
    if (payload.empty()) throw Error("empty-payload", "NFT payload must be non-empty");
    Note note;
    note.npk = npk;
    note.r = big_r;
    if (obfuscated) {
        if (!nonces.claim(nonce)) throw Error("nonce-reuse", "nonce already used for an NFT");
        note.type = NoteType::ObfuscatedNft;
        note.nonce = nonce;
        note.enc = encrypt(k, payload, nonce);
    } else {
        note.type = NoteType::TransparentNft;
        note.nonce = Scalar::zero();
        note.enc = encode_scalars(payload);
    }
    return note;
}

inline Note mint_nft(const GroupElement& npk, const GroupElement& big_r,
                     std::span<const Scalar> payload, const SymKey& k, bool obfuscated,
                     Rng& rng, NonceRegistry& nonces) {
    return mint_nft(npk, big_r, payload, k, obfuscated, Scalar::random(rng), nonces);
}

// Leaf value for the notes tree. Binds every field, including the type and
// an authenticated digest of the payload bytes.
inline Scalar note_hash(const Note& note) {
    if (!note.pos) throw Error("pos", "note_hash requires an assigned position");
    std::vector<Fq> elems;
    detail::flatten_into(elems, static_cast<uint64_t>(note.type));
    if (note.com) detail::flatten_into(elems, *note.com);
    detail::flatten_into(elems, *note.pos);
    detail::flatten_into(elems, note.nonce);
    detail::flatten_into(elems, hash_fast(note.enc));
    detail::flatten_into(elems, note.npk);
    detail::flatten_into(elems, note.r);
    return hash_sponge_tagged("", elems);
}

inline Nullifier compute_nullifier(const NoteSecretKey& nsk, uint64_t pos) {
    return {hash_sponge(nsk.npk_prime, pos)};
}

// Receiver-side opening recovery for value notes. Fails closed on wrong
// keys, tampered payloads, or a commitment that does not match.
inline std::optional<NoteOpening> recover_value_opening(const Note& note,
                                                        const GroupElement& k_dh) {
    if (!is_value_type(note.type) || !note.com) return std::nullopt;
    NoteOpening op;
    if (note.type == NoteType::TransparentValue) {
        auto xs = decode_scalars(note.enc);
        if (!xs || xs->size() != 1) return std::nullopt;
        op.v = (*xs)[0];
        op.s = Scalar::zero();
    } else {
        auto xs = decrypt(derive_symmetric_key(k_dh), note.enc, note.nonce);
        if (!xs || xs->size() != 2) return std::nullopt;
        op.v = (*xs)[0];
        op.s = (*xs)[1];
    }
    if (!op.v.fits_value_range()) return std::nullopt;
    if (!open(default_commit_key(), op.v, op.s, *note.com)) return std::nullopt;
    return op;
}

// NFT payload recovery; k is ignored for the transparent type.
inline std::optional<std::vector<Scalar>> recover_nft_payload(const Note& note,
                                                              const SymKey& k) {
    if (!is_nft_type(note.type)) return std::nullopt;
    if (note.type == NoteType::TransparentNft) return decode_scalars(note.enc);
    return decrypt(k, note.enc, note.nonce);
}

}  // namespace citadel
