#pragma once

#include <variant>

#include "citadel/merkle.hpp"
#include "citadel/note.hpp"
#include "citadel/sign.hpp"

namespace citadel {

// Opaque contract invocation riding on a transaction. The body is bound by
// tx_hash; the attached proof is not, mirroring how signatures and proofs
// stay outside the signed payload.
struct ContractCall {
    uint8_t kind = 0;
    Bytes body;
    Bytes proof;

    void serialize(ByteWriter& w) const {
        w.u8(kind);
        w.bytes(body);
        w.bytes(proof);
    }
    static ContractCall deserialize(ByteReader& rd) {
        ContractCall cc;
        cc.kind = rd.u8();
        cc.body = rd.bytes();
        cc.proof = rd.bytes();
        return cc;
    }
};

inline constexpr uint8_t CONTRACT_KIND_LICENSE = 1;

// Public inputs of the spend relation. Spent note types are part of the
// statement: a verifier must see that only value notes fund a transfer,
// otherwise an NFT could be spent as money.
struct TxStatement {
    Scalar notes_root;
    std::vector<Scalar> nullifiers;
    std::vector<uint8_t> spend_types;
    std::vector<GroupElement> mint_commitments;  // value mints only, in mint order
    Scalar gas;
    Scalar tx_hash;

    void serialize(ByteWriter& w) const {
        w.raw(notes_root.to_bytes());
        w.u32(static_cast<uint32_t>(nullifiers.size()));
        for (const auto& n : nullifiers) w.raw(n.to_bytes());
        w.u32(static_cast<uint32_t>(spend_types.size()));
        for (uint8_t t : spend_types) w.u8(t);
        w.u32(static_cast<uint32_t>(mint_commitments.size()));
        for (const auto& c : mint_commitments) w.raw(c.encode());
        w.raw(gas.to_bytes());
        w.raw(tx_hash.to_bytes());
    }

    static TxStatement deserialize(ByteReader& rd) {
        TxStatement st;
        st.notes_root = read_scalar(rd);
        uint32_t n = rd.u32();
        for (uint32_t i = 0; i < n; i++) st.nullifiers.push_back(read_scalar(rd));
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) st.spend_types.push_back(rd.u8());
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            auto p = GroupElement::decode(rd.take(32));
            if (!p) throw Error("decode", "bad mint commitment");
            st.mint_commitments.push_back(*p);
        }
        st.gas = read_scalar(rd);
        st.tx_hash = read_scalar(rd);
        return st;
    }

    static Scalar read_scalar(ByteReader& rd) {
        auto s = Scalar::from_bytes(rd.take(32));
        if (!s) throw Error("decode", "non-canonical scalar");
        return *s;
    }
};

struct SpendWitness {
    Note note;
    MerkleProof proof;
    NoteSecretKey nsk;
    NoteOpening opening;
    DoubleSignature sig;
};

struct TxWitness {
    std::vector<SpendWitness> spends;
    std::vector<NoteOpening> mint_openings;  // one per value mint, in mint order

    void serialize(ByteWriter& w) const {
        w.u32(static_cast<uint32_t>(spends.size()));
        for (const auto& sp : spends) {
            sp.note.serialize(w);
            sp.proof.serialize(w);
            w.raw(sp.nsk.nsk.to_bytes());
            w.raw(sp.nsk.npk_prime.encode());
            w.raw(sp.opening.v.to_bytes());
            w.raw(sp.opening.s.to_bytes());
            w.raw(sp.sig.r.encode());
            w.raw(sp.sig.r_prime.encode());
            w.raw(sp.sig.u.to_bytes());
        }
        w.u32(static_cast<uint32_t>(mint_openings.size()));
        for (const auto& op : mint_openings) {
            w.raw(op.v.to_bytes());
            w.raw(op.s.to_bytes());
        }
    }

    static TxWitness deserialize(ByteReader& rd) {
        TxWitness wit;
        uint32_t n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            SpendWitness sp;
            sp.note = Note::deserialize(rd);
            sp.proof = MerkleProof::deserialize(rd);
            sp.nsk.nsk = TxStatement::read_scalar(rd);
            sp.nsk.npk_prime = read_point(rd);
            sp.opening.v = TxStatement::read_scalar(rd);
            sp.opening.s = TxStatement::read_scalar(rd);
            sp.sig.r = read_point(rd);
            sp.sig.r_prime = read_point(rd);
            sp.sig.u = TxStatement::read_scalar(rd);
            wit.spends.push_back(std::move(sp));
        }
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            NoteOpening op;
            op.v = TxStatement::read_scalar(rd);
            op.s = TxStatement::read_scalar(rd);
            wit.mint_openings.push_back(op);
        }
        return wit;
    }

    static GroupElement read_point(ByteReader& rd) {
        auto p = GroupElement::decode(rd.take(32));
        if (!p) throw Error("decode", "bad witness point");
        return *p;
    }
};

struct RelationResult {
    bool ok = false;
    std::string clause;  // empty on accept
    size_t index = 0;    // offending spend/mint index

    static RelationResult accept() { return {true, "", 0}; }
    static RelationResult reject(std::string clause, size_t index = 0) {
        return {false, std::move(clause), index};
    }
};

// The spend relation. Checked clause by clause per spend, type first, so a
// targeted corruption reports the clause it broke:
//   type        spent note type is public and a value type
//   membership  note_hash sits in the tree under the statement root
//   ownership   holder knows nsk for npk/npk' and signed tx_hash with it
//   nullification  published nullifier is hash(npk', pos)
//   opening     commitments open for all spends and value mints
//   balance     values in range and sum(in) = sum(out) + gas
inline RelationResult check_tx_relation(const TxStatement& st, const TxWitness& wit) {
    size_t n = wit.spends.size();
    if (st.nullifiers.size() != n || st.spend_types.size() != n)
        return RelationResult::reject("shape");
    if (st.mint_commitments.size() != wit.mint_openings.size())
        return RelationResult::reject("shape");

    for (size_t i = 0; i < n; i++) {
        const auto& sp = wit.spends[i];
        if (st.spend_types[i] != static_cast<uint8_t>(sp.note.type) ||
            !is_value_type(sp.note.type)) {
            return RelationResult::reject("type", i);
        }
        if (!sp.note.pos || sp.proof.pos != *sp.note.pos ||
            sp.proof.leaf != note_hash(sp.note) ||
            !merkle_verify(st.notes_root, sp.proof)) {
            return RelationResult::reject("membership", i);
        }
        if (mul_gen(sp.nsk.nsk) != sp.note.npk ||
            mul_gen_prime(sp.nsk.nsk) != sp.nsk.npk_prime ||
            !verify_double(sp.note.npk, sp.nsk.npk_prime, st.tx_hash, sp.sig)) {
            return RelationResult::reject("ownership", i);
        }
        if (st.nullifiers[i] != compute_nullifier(sp.nsk, *sp.note.pos).value) {
            return RelationResult::reject("nullification", i);
        }
        if (!sp.note.com ||
            !open(default_commit_key(), sp.opening.v, sp.opening.s, *sp.note.com)) {
            return RelationResult::reject("opening", i);
        }
    }
    for (size_t j = 0; j < wit.mint_openings.size(); j++) {
        const auto& op = wit.mint_openings[j];
        if (!open(default_commit_key(), op.v, op.s, st.mint_commitments[j])) {
            return RelationResult::reject("opening", n + j);
        }
    }

    Scalar in = Scalar::zero(), out = st.gas;
    if (!st.gas.fits_value_range()) return RelationResult::reject("balance");
    for (size_t i = 0; i < n; i++) {
        if (!wit.spends[i].opening.v.fits_value_range())
            return RelationResult::reject("balance", i);
        in += wit.spends[i].opening.v;
    }
    for (size_t j = 0; j < wit.mint_openings.size(); j++) {
        if (!wit.mint_openings[j].v.fits_value_range())
            return RelationResult::reject("balance", n + j);
        out += wit.mint_openings[j].v;
    }
    if (in != out) return RelationResult::reject("balance");
    return RelationResult::accept();
}

// Proof system interface for the spend relation. The default implementation
// is the transparent backend in backend.hpp; a succinct one can be slotted
// in without touching transaction assembly.
class TxProofBackend {
public:
    virtual ~TxProofBackend() = default;
    virtual Bytes prove_tx(const TxStatement& st, const TxWitness& wit) = 0;
    virtual RelationResult verify_tx(const TxStatement& st, const Bytes& proof) = 0;
};

struct Transaction {
    std::vector<Nullifier> spends;
    std::vector<Note> mints;  // pos unassigned until inclusion
    Scalar gas;
    Scalar tx_hash;
    std::vector<DoubleSignature> sigs;  // one per spend, over tx_hash
    TxStatement statement;
    Bytes proof;
    std::optional<ContractCall> contract_call;

    void serialize(ByteWriter& w) const {
        w.raw({reinterpret_cast<const uint8_t*>("CTX1"), 4});
        w.u8(1);
        w.u32(static_cast<uint32_t>(spends.size()));
        for (const auto& nf : spends) w.raw(nf.value.to_bytes());
        w.u32(static_cast<uint32_t>(mints.size()));
        for (const auto& m : mints) m.serialize(w);
        w.raw(gas.to_bytes());
        w.raw(tx_hash.to_bytes());
        for (const auto& sig : sigs) {
            w.raw(sig.r.encode());
            w.raw(sig.r_prime.encode());
            w.raw(sig.u.to_bytes());
        }
        statement.serialize(w);
        w.bytes(proof);
        w.u8(contract_call ? 1 : 0);
        if (contract_call) contract_call->serialize(w);
    }

    static Transaction deserialize(ByteReader& rd) {
        auto magic = rd.take(4);
        if (Bytes(magic.begin(), magic.end()) != Bytes{'C', 'T', 'X', '1'})
            throw Error("decode", "bad transaction magic");
        if (rd.u8() != 1) throw Error("decode", "unsupported transaction version");
        Transaction tx;
        uint32_t n = rd.u32();
        for (uint32_t i = 0; i < n; i++) tx.spends.push_back({TxStatement::read_scalar(rd)});
        uint32_t m = rd.u32();
        for (uint32_t i = 0; i < m; i++) tx.mints.push_back(Note::deserialize(rd));
        tx.gas = TxStatement::read_scalar(rd);
        tx.tx_hash = TxStatement::read_scalar(rd);
        for (uint32_t i = 0; i < n; i++) {
            DoubleSignature sig;
            sig.r = TxWitness::read_point(rd);
            sig.r_prime = TxWitness::read_point(rd);
            sig.u = TxStatement::read_scalar(rd);
            tx.sigs.push_back(sig);
        }
        tx.statement = TxStatement::deserialize(rd);
        tx.proof = rd.bytes();
        if (rd.u8()) tx.contract_call = ContractCall::deserialize(rd);
        return tx;
    }
};

// Digest of a freshly minted note, before it has a position. Everything the
// minter fixes is bound; the position the ledger will assign is not.
inline Scalar mint_digest(const Note& note) {
    std::vector<Fq> elems;
    detail::flatten_into(elems, static_cast<uint64_t>(note.type));
    if (note.com) detail::flatten_into(elems, *note.com);
    detail::flatten_into(elems, note.nonce);
    detail::flatten_into(elems, hash_fast(note.enc));
    detail::flatten_into(elems, note.npk);
    detail::flatten_into(elems, note.r);
    return hash_sponge_tagged("note-mint", elems);
}

// What gets signed and what nullifier-binding commits to: spends, mints,
// gas, and the contract call body. Signatures and proofs stay out, so they
// cannot malleate the hash they are checked against.
inline Scalar compute_tx_hash(std::span<const Nullifier> spends, std::span<const Note> mints,
                              const Scalar& gas,
                              const std::optional<ContractCall>& contract_call) {
    std::vector<Fq> elems;
    detail::flatten_into(elems, static_cast<uint64_t>(spends.size()));
    detail::flatten_into(elems, static_cast<uint64_t>(mints.size()));
    for (const auto& nf : spends) detail::flatten_into(elems, nf.value);
    for (const auto& m : mints) detail::flatten_into(elems, mint_digest(m));
    detail::flatten_into(elems, gas);
    if (contract_call) {
        detail::flatten_into(elems, uint64_t{1});
        detail::flatten_into(elems, static_cast<uint64_t>(contract_call->kind));
        detail::flatten_into(elems, hash_fast(contract_call->body));
    } else {
        detail::flatten_into(elems, uint64_t{0});
    }
    return hash_sponge_tagged("tx-hash", elems);
}

// One spend as the wallet hands it over: the note, the secrets to spend it,
// and a fresh membership proof against the root the statement will use.
struct SpendInput {
    Note note;
    NoteSecretKey nsk;
    NoteOpening opening;
    MerkleProof proof;
};

struct ValueMint {
    PublicKey to;
    Scalar amount;
    bool obfuscated = true;
};

struct NftMint {
    GroupElement npk;
    GroupElement big_r;
    SymKey key;
    std::vector<Scalar> payload;
    bool obfuscated = true;
    std::optional<Scalar> nonce;  // sampled when absent
};

using MintInstruction = std::variant<ValueMint, NftMint>;

// Assemble a balanced transaction: mint the outputs, derive nullifiers,
// hash, sign each spend with its note secret key, and attach a backend
// proof for the spend relation. Errors: "type" for NFT inputs, "unbalanced"
// when Eq. sum(in) = sum(out) + gas fails, "range"/"pos" from note checks.
inline Transaction build_transaction(std::span<const SpendInput> spend_inputs,
                                     std::span<const MintInstruction> mint_instructions,
                                     const Scalar& gas,
                                     std::optional<ContractCall> contract_call,
                                     const Scalar& notes_root, TxProofBackend& backend,
                                     NonceRegistry& nonces, Rng& rng) {
    if (!gas.fits_value_range()) throw Error("range", "gas exceeds the value cap");
    Scalar in = Scalar::zero(), out = gas;
    for (const auto& sp : spend_inputs) {
        if (!is_value_type(sp.note.type))
            throw Error("type", "only value notes can fund a transaction");
        if (!sp.note.pos) throw Error("pos", "spend note has no ledger position");
        if (!sp.note.com || !open(default_commit_key(), sp.opening.v, sp.opening.s, *sp.note.com))
            throw Error("opening", "spend opening does not match the note");
        if (!sp.opening.v.fits_value_range()) throw Error("range", "spend value out of range");
        in += sp.opening.v;
    }
    for (const auto& mi : mint_instructions) {
        if (const auto* vm = std::get_if<ValueMint>(&mi)) {
            if (!vm->amount.fits_value_range())
                throw Error("range", "mint value out of range");
            out += vm->amount;
        }
    }
    if (in != out) throw Error("unbalanced", "spends do not cover mints plus gas");

    Transaction tx;
    TxWitness wit;
    for (const auto& mi : mint_instructions) {
        if (const auto* vm = std::get_if<ValueMint>(&mi)) {
            auto [note, opening] = mint_value_note(vm->to, vm->amount, vm->obfuscated, rng);
            tx.statement.mint_commitments.push_back(*note.com);
            wit.mint_openings.push_back(opening);
            tx.mints.push_back(std::move(note));
        } else {
            const auto& nm = std::get<NftMint>(mi);
            Scalar nonce = nm.nonce ? *nm.nonce : Scalar::random(rng);
            tx.mints.push_back(
                mint_nft(nm.npk, nm.big_r, nm.payload, nm.key, nm.obfuscated, nonce, nonces));
        }
    }
    for (const auto& sp : spend_inputs) {
        tx.spends.push_back(compute_nullifier(sp.nsk, *sp.note.pos));
    }
    tx.gas = gas;
    tx.contract_call = std::move(contract_call);
    tx.tx_hash = compute_tx_hash(tx.spends, tx.mints, tx.gas, tx.contract_call);

    tx.statement.notes_root = notes_root;
    tx.statement.gas = gas;
    tx.statement.tx_hash = tx.tx_hash;
    for (size_t i = 0; i < spend_inputs.size(); i++) {
        const auto& sp = spend_inputs[i];
        SpendWitness sw;
        sw.note = sp.note;
        sw.proof = sp.proof;
        sw.nsk = sp.nsk;
        sw.opening = sp.opening;
        sw.sig = sign_double(sp.nsk.nsk, tx.tx_hash, rng);
        tx.sigs.push_back(sw.sig);
        tx.statement.nullifiers.push_back(tx.spends[i].value);
        tx.statement.spend_types.push_back(static_cast<uint8_t>(sp.note.type));
        wit.spends.push_back(std::move(sw));
    }
    tx.proof = backend.prove_tx(tx.statement, wit);
    return tx;
}

}  // namespace citadel
