#pragma once

#include "citadel/license.hpp"
#include "citadel/transaction.hpp"

namespace citadel {

namespace detail {

inline Bytes32 proof_binding(const Bytes& witness_bytes, const Bytes& statement_bytes) {
    sodium_ready();
    crypto_generichash_state st;
    crypto_generichash_init(&st, nullptr, 0, 32);
    crypto_generichash_update(&st, witness_bytes.data(), witness_bytes.size());
    crypto_generichash_update(&st, statement_bytes.data(), statement_bytes.size());
    Bytes32 out;
    crypto_generichash_final(&st, out.data(), out.size());
    return out;
}

template <typename Statement, typename Witness>
Bytes encode_proof_blob(const char magic[4], const Statement& st, const Witness& wit) {
    ByteWriter ww;
    wit.serialize(ww);
    Bytes witb = ww.take();
    ByteWriter sw;
    st.serialize(sw);
    Bytes32 binding = proof_binding(witb, sw.take());
    ByteWriter out;
    out.raw({reinterpret_cast<const uint8_t*>(magic), 4});
    out.bytes(witb);
    out.raw(binding);
    return out.take();
}

template <typename Statement, typename Witness>
std::optional<Witness> decode_proof_blob(const char magic[4], const Statement& st,
                                         const Bytes& proof) {
    try {
        ByteReader rd(proof);
        auto m = rd.take(4);
        if (!std::equal(m.begin(), m.end(), reinterpret_cast<const uint8_t*>(magic)))
            return std::nullopt;
        Bytes witb = rd.bytes();
        Bytes32 binding = rd.take32();
        if (!rd.done()) return std::nullopt;
        ByteWriter sw;
        st.serialize(sw);
        if (binding != proof_binding(witb, sw.take())) return std::nullopt;
        ByteReader wr(witb);
        Witness wit = Witness::deserialize(wr);
        if (!wr.done()) return std::nullopt;
        return wit;
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

}  // namespace detail

// Proof encodings usable without a backend instance; the adversarial tests
// build proofs for deliberately broken witnesses through these.
inline Bytes encode_tx_proof(const TxStatement& st, const TxWitness& wit) {
    return detail::encode_proof_blob("TPF1", st, wit);
}

inline Bytes encode_license_proof(const LicenseStatement& st, const LicenseWitness& wit) {
    return detail::encode_proof_blob("LPF1", st, wit);
}

// Default proof system: the "proof" is the serialized witness bound to the
// statement by a hash, and verification re-runs the relation checker. Sound
// and complete for testing, with no zero-knowledge whatsoever; a succinct
// backend replaces this class without touching the callers.
class TransparentBackend : public TxProofBackend, public LicenseProofBackend {
public:
    Bytes prove_tx(const TxStatement& st, const TxWitness& wit) override {
        return encode_tx_proof(st, wit);
    }

    RelationResult verify_tx(const TxStatement& st, const Bytes& proof) override {
        auto wit = detail::decode_proof_blob<TxStatement, TxWitness>("TPF1", st, proof);
        if (!wit) return RelationResult::reject("proof-encoding");
        return check_tx_relation(st, *wit);
    }

    Bytes prove_license(const LicenseStatement& st, const LicenseWitness& wit) override {
        return encode_license_proof(st, wit);
    }

    RelationResult verify_license(const LicenseStatement& st, const Bytes& proof) override {
        auto wit =
            detail::decode_proof_blob<LicenseStatement, LicenseWitness>("LPF1", st, proof);
        if (!wit) return RelationResult::reject("proof-encoding");
        return check_license_relation(st, *wit);
    }
};

}  // namespace citadel
