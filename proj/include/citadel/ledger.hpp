#pragma once

#include <fstream>
#include <map>

#include "citadel/backend.hpp"

namespace citadel {

struct Receipt {
    Scalar tx_hash;
    bool accepted = false;
    std::vector<uint64_t> positions;  // minted note positions, sc-note last
    std::optional<uint64_t> sc_pos;
    std::string reject_reason;  // clause or rule identifier, empty when accepted
};

struct LoggedTx {
    Transaction tx;  // mints carry their assigned positions
    uint64_t height = 0;
    std::vector<uint64_t> positions;
    std::optional<uint64_t> sc_pos;
    bool faucet = false;
};

// Single-node ledger: one transaction per block, flat fee, strict
// validate-then-apply so a rejection never leaves partial state. Every
// historical notes root is accepted for membership proofs; spent sets only
// grow.
class Ledger {
public:
    explicit Ledger(Scalar gas_fee = Scalar::from_u64(1), uint32_t arity = 4,
                    uint32_t depth = 17)
        : gas_fee_(gas_fee), notes_(arity, depth), license_nullifiers_(arity, depth) {}

    const MerkleTree& notes() const { return notes_; }
    const MerkleTree& license_nullifiers() const { return license_nullifiers_; }
    Scalar gas_fee() const { return gas_fee_; }
    uint64_t height() const { return height_; }
    const std::vector<Scalar>& tx_order() const { return tx_order_; }
    const std::vector<std::string>& event_log() const { return event_log_; }

    const LoggedTx* find_tx(const Scalar& tx_hash) const {
        auto it = tx_log_.find(tx_hash);
        return it == tx_log_.end() ? nullptr : &it->second;
    }

    bool nullifier_spent(const Scalar& nf) const { return spent_.count(nf) > 0; }
    bool license_nullifier_seen(const Scalar& nf) const { return license_seen_.count(nf) > 0; }

    std::optional<Note> note_at(uint64_t pos) const {
        auto it = notes_by_pos_.find(pos);
        if (it == notes_by_pos_.end()) return std::nullopt;
        return it->second;
    }

    bool note_invalidated(uint64_t pos) const {
        return pos < notes_.size() && notes_.invalidated(pos);
    }

    MerkleProof prove_note(uint64_t pos) const { return notes_.prove(pos); }

    Receipt submit(const Transaction& tx, TxProofBackend& txb, LicenseProofBackend& licb) {
        Receipt r;
        r.tx_hash = tx.tx_hash;
        std::string reason = validate(tx, txb, licb);
        if (!reason.empty()) {
            r.reject_reason = reason;
            return r;
        }
        apply(tx, r, false);
        return r;
    }

    // Simulation-only money creation; excluded from the conservation
    // audit. The note is a regular obfuscated value note the receiver can
    // scan and spend.
    Receipt faucet(const PublicKey& to, const Scalar& amount, Rng& rng) {
        if (!amount.fits_value_range()) throw Error("range", "faucet amount out of range");
        if (notes_.size() + 1 > notes_.capacity()) throw Error("tree-full", "notes tree full");
        auto [note, opening] = mint_value_note(to, amount, true, rng);
        (void)opening;
        Transaction tx;
        tx.mints.push_back(std::move(note));
        tx.gas = Scalar::zero();
        tx.tx_hash = compute_tx_hash(tx.spends, tx.mints, tx.gas, tx.contract_call);
        tx.statement.notes_root = notes_.root();
        tx.statement.gas = tx.gas;
        tx.statement.tx_hash = tx.tx_hash;
        if (tx_log_.count(tx.tx_hash)) throw Error("duplicate-tx", "faucet tx replay");
        Receipt r;
        r.tx_hash = tx.tx_hash;
        apply(tx, r, true);
        return r;
    }

    // Notes visible to a view key, in inclusion order. Positions make the
    // result stable across incremental scans.
    std::vector<std::pair<Note, uint64_t>> scan(const ViewKey& vk,
                                                uint64_t from_height = 0) const {
        std::vector<std::pair<Note, uint64_t>> found;
        for (uint64_t h = from_height; h < tx_order_.size(); h++) {
            const LoggedTx& lt = tx_log_.at(tx_order_[h]);
            for (size_t i = 0; i < lt.tx.mints.size(); i++) {
                const Note& n = lt.tx.mints[i];
                if (note_addressed_to(vk, n.npk, n.r)) found.emplace_back(n, lt.positions[i]);
            }
            if (lt.sc_pos) {
                const Note& n = notes_by_pos_.at(*lt.sc_pos);
                if (note_addressed_to(vk, n.npk, n.r)) found.emplace_back(n, *lt.sc_pos);
            }
        }
        return found;
    }

    // SP-gated revocation: tombstone the leaf once the SP proves it issued
    // the license sitting at pos.
    Scalar revoke_license_note(uint64_t pos, const Signature& sig_lic,
                               const GroupElement& npk_user, const Scalar& attr,
                               const GroupElement& lic_pk) {
        auto note = note_at(pos);
        if (!note) throw Error("unknown-pos", "no note at this position");
        if (note->npk != npk_user) throw Error("revoke-npk", "note key does not match");
        if (!verify_single(lic_pk, license_message(npk_user, attr), sig_lic)) {
            throw Error("revoke-sig", "proof of issuance does not verify");
        }
        Scalar root = notes_.invalidate(pos);
        event_log_.push_back("{\"event\":\"revoke\",\"pos\":" + std::to_string(pos) +
                             ",\"root\":\"" + to_hex(root.to_bytes()) + "\"}");
        return root;
    }

    std::optional<LicenseCallRecord> find_license_call(const Scalar& tx_hash) const {
        const LoggedTx* lt = find_tx(tx_hash);
        if (!lt || !lt->tx.contract_call ||
            lt->tx.contract_call->kind != CONTRACT_KIND_LICENSE || !lt->sc_pos) {
            return std::nullopt;
        }
        auto body = LicenseCallBody::deserialize(lt->tx.contract_call->body);
        LicenseCallRecord rec;
        rec.statement = body.statement(lt->tx.tx_hash);
        rec.sc_note = notes_by_pos_.at(*lt->sc_pos);
        return rec;
    }

    void serialize(ByteWriter& w) const {
        w.raw({reinterpret_cast<const uint8_t*>("CLG1"), 4});
        w.u8(1);
        w.raw(gas_fee_.to_bytes());
        ByteWriter tw;
        notes_.serialize(tw);
        w.bytes(tw.take());
        ByteWriter lw;
        license_nullifiers_.serialize(lw);
        w.bytes(lw.take());
        w.u32(static_cast<uint32_t>(spent_.size()));
        for (const auto& s : spent_) w.raw(s.to_bytes());
        w.u32(static_cast<uint32_t>(license_seen_.size()));
        for (const auto& s : license_seen_) w.raw(s.to_bytes());
        w.u32(static_cast<uint32_t>(tx_order_.size()));
        for (const auto& h : tx_order_) {
            const LoggedTx& lt = tx_log_.at(h);
            lt.tx.serialize(w);
            w.u64(lt.height);
            w.u32(static_cast<uint32_t>(lt.positions.size()));
            for (uint64_t p : lt.positions) w.u64(p);
            w.u8(lt.sc_pos ? 1 : 0);
            if (lt.sc_pos) w.u64(*lt.sc_pos);
            w.u8(lt.faucet ? 1 : 0);
        }
        w.u32(static_cast<uint32_t>(notes_by_pos_.size()));
        for (const auto& [pos, note] : notes_by_pos_) {
            w.u64(pos);
            note.serialize(w);
        }
        w.u32(static_cast<uint32_t>(event_log_.size()));
        for (const auto& line : event_log_) {
            w.bytes({reinterpret_cast<const uint8_t*>(line.data()), line.size()});
        }
        w.u64(height_);
    }

    static Ledger deserialize(ByteReader& rd) {
        auto magic = rd.take(4);
        if (Bytes(magic.begin(), magic.end()) != Bytes{'C', 'L', 'G', '1'})
            throw Error("corrupt", "bad ledger magic");
        if (rd.u8() != 1) throw Error("version", "unsupported ledger version");
        Scalar fee = TxStatement::read_scalar(rd);
        Bytes tree_blob = rd.bytes();
        ByteReader tr(tree_blob);
        MerkleTree notes = MerkleTree::deserialize(tr);
        Bytes lic_blob = rd.bytes();
        ByteReader lr(lic_blob);
        MerkleTree lic = MerkleTree::deserialize(lr);
        Ledger ledger(fee, notes.arity(), notes.depth());
        ledger.notes_ = std::move(notes);
        ledger.license_nullifiers_ = std::move(lic);
        uint32_t n = rd.u32();
        for (uint32_t i = 0; i < n; i++) ledger.spent_.insert(TxStatement::read_scalar(rd));
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++)
            ledger.license_seen_.insert(TxStatement::read_scalar(rd));
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            LoggedTx lt;
            lt.tx = Transaction::deserialize(rd);
            lt.height = rd.u64();
            uint32_t np = rd.u32();
            for (uint32_t j = 0; j < np; j++) lt.positions.push_back(rd.u64());
            if (rd.u8()) lt.sc_pos = rd.u64();
            lt.faucet = rd.u8() != 0;
            ledger.tx_order_.push_back(lt.tx.tx_hash);
            ledger.tx_log_.emplace(lt.tx.tx_hash, std::move(lt));
        }
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            uint64_t pos = rd.u64();
            ledger.notes_by_pos_.emplace(pos, Note::deserialize(rd));
        }
        n = rd.u32();
        for (uint32_t i = 0; i < n; i++) {
            Bytes line = rd.bytes();
            ledger.event_log_.emplace_back(line.begin(), line.end());
        }
        ledger.height_ = rd.u64();
        return ledger;
    }

    // Stable digest of the full state, for replay and atomicity probes.
    std::string digest() const {
        ByteWriter w;
        serialize(w);
        Bytes blob = w.take();
        Bytes32 out;
        crypto_generichash(out.data(), out.size(), blob.data(), blob.size(), nullptr, 0);
        return to_hex(out);
    }

    void persist(const std::string& path) const {
        ByteWriter w;
        serialize(w);
        Bytes payload = w.take();
        Bytes32 checksum;
        crypto_generichash(checksum.data(), checksum.size(), payload.data(), payload.size(),
                           nullptr, 0);
        std::ofstream f(path, std::ios::binary | std::ios::trunc);
        if (!f) throw Error("io", "cannot open ledger file for writing");
        f.write(reinterpret_cast<const char*>(payload.data()), payload.size());
        f.write(reinterpret_cast<const char*>(checksum.data()), checksum.size());
        if (!f) throw Error("io", "short write to ledger file");
    }

    static Ledger restore(const std::string& path) {
        std::ifstream f(path, std::ios::binary);
        if (!f) throw Error("io", "cannot open ledger file");
        Bytes blob((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
        if (blob.size() < 32) throw Error("corrupt", "ledger file too short");
        Bytes payload(blob.begin(), blob.end() - 32);
        Bytes32 expect;
        std::copy(blob.end() - 32, blob.end(), expect.begin());
        Bytes32 got;
        crypto_generichash(got.data(), got.size(), payload.data(), payload.size(), nullptr,
                           0);
        if (got != expect) throw Error("corrupt", "ledger checksum mismatch");
        ByteReader rd(payload);
        Ledger ledger = deserialize(rd);
        if (!rd.done()) throw Error("corrupt", "trailing bytes in ledger file");
        return ledger;
    }

private:
    // Every rule checked up front; returns the first violated rule's
    // identifier or empty for acceptance. No state is touched here.
    std::string validate(const Transaction& tx, TxProofBackend& txb,
                         LicenseProofBackend& licb) const {
        if (tx.tx_hash != compute_tx_hash(tx.spends, tx.mints, tx.gas, tx.contract_call))
            return "tx-hash";
        if (tx.gas != gas_fee_) return "gas";
        if (tx.sigs.size() != tx.spends.size()) return "shape";

        const TxStatement& st = tx.statement;
        if (st.tx_hash != tx.tx_hash || st.gas != tx.gas) return "statement-mismatch";
        if (st.nullifiers.size() != tx.spends.size() ||
            st.spend_types.size() != tx.spends.size()) {
            return "statement-mismatch";
        }
        for (size_t i = 0; i < tx.spends.size(); i++) {
            if (st.nullifiers[i] != tx.spends[i].value) return "statement-mismatch";
            if (!is_value_type(static_cast<NoteType>(st.spend_types[i]))) return "type";
        }
        if (!notes_.known_root(st.notes_root)) return "unknown-root";

        std::set<Scalar, ScalarLess> fresh;
        for (const auto& nf : tx.spends) {
            if (spent_.count(nf.value) || !fresh.insert(nf.value).second)
                return "nullifier-seen";
        }
        if (tx_log_.count(tx.tx_hash)) return "duplicate-tx";

        std::vector<GroupElement> value_coms;
        for (const auto& m : tx.mints) {
            std::string reason = check_mint_shape(m);
            if (!reason.empty()) return reason;
            if (m.com) value_coms.push_back(*m.com);
        }
        if (value_coms.size() != st.mint_commitments.size()) return "mint-commitments";
        for (size_t i = 0; i < value_coms.size(); i++) {
            if (!(value_coms[i] == st.mint_commitments[i])) return "mint-commitments";
        }

        uint64_t incoming = tx.mints.size();
        std::optional<LicenseCallBody> body;
        if (tx.contract_call) {
            if (tx.contract_call->kind != CONTRACT_KIND_LICENSE) return "contract-kind";
            try {
                body = LicenseCallBody::deserialize(tx.contract_call->body);
            } catch (const std::exception&) {
                return "license-body";
            }
            if (!notes_.known_root(body->notes_root)) return "unknown-root";
            if (license_seen_.count(body->nullifier_lic)) return "license-nullifier-seen";
            if (body->sc_note.type != NoteType::ObfuscatedNft || body->sc_note.pos ||
                body->sc_note.com) {
                return "sc-note";
            }
            incoming += 1;
            if (license_nullifiers_.full()) return "tree-full";
        }
        if (notes_.size() + incoming > notes_.capacity()) return "tree-full";

        auto proof_result = txb.verify_tx(st, tx.proof);
        if (!proof_result.ok) return proof_result.clause;
        if (body) {
            auto lic_result = licb.verify_license(body->statement(tx.tx_hash),
                                                  tx.contract_call->proof);
            if (!lic_result.ok) return lic_result.clause;
        }
        return "";
    }

    std::string check_mint_shape(const Note& m) const {
        if (m.pos) return "mint-pos";
        if (is_value_type(m.type) && !m.com) return "note-shape";
        if (is_nft_type(m.type) && m.com) return "note-shape";
        if (m.type == NoteType::TransparentValue) {
            if (!m.nonce.is_zero()) return "note-shape";
            auto xs = decode_scalars(m.enc);
            if (!xs || xs->size() != 1 || !(*xs)[0].fits_value_range()) return "note-shape";
            if (!open(default_commit_key(), (*xs)[0], Scalar::zero(), *m.com))
                return "transparent-note";
        }
        if (m.type == NoteType::TransparentNft && !m.nonce.is_zero()) return "note-shape";
        return "";
    }

    void apply(const Transaction& tx, Receipt& r, bool faucet) {
        LoggedTx lt;
        lt.tx = tx;
        lt.height = height_;
        lt.faucet = faucet;
        for (const auto& nf : tx.spends) spent_.insert(nf.value);
        for (auto& m : lt.tx.mints) {
            m.pos = notes_.size();
            notes_.append(note_hash(m));
            notes_by_pos_.emplace(*m.pos, m);
            lt.positions.push_back(*m.pos);
        }
        std::string lic_event;
        if (tx.contract_call && tx.contract_call->kind == CONTRACT_KIND_LICENSE) {
            auto body = LicenseCallBody::deserialize(tx.contract_call->body);
            license_nullifiers_.append(body.nullifier_lic);
            license_seen_.insert(body.nullifier_lic);
            Note scn = body.sc_note;
            scn.pos = notes_.size();
            notes_.append(note_hash(scn));
            notes_by_pos_.emplace(*scn.pos, scn);
            lt.sc_pos = *scn.pos;
            lic_event = ",\"license_nullifier\":\"" +
                        to_hex(body.nullifier_lic.to_bytes()) + "\",\"sc_pos\":" +
                        std::to_string(*scn.pos);
        }
        r.accepted = true;
        r.positions = lt.positions;
        r.sc_pos = lt.sc_pos;
        if (lt.sc_pos) r.positions.push_back(*lt.sc_pos);

        std::string line = "{\"event\":\"tx\",\"height\":" + std::to_string(height_) +
                           ",\"tx_hash\":\"" + to_hex(tx.tx_hash.to_bytes()) + "\"";
        if (faucet) line += ",\"faucet\":true";
        line += ",\"positions\":[";
        for (size_t i = 0; i < lt.positions.size(); i++) {
            if (i) line += ",";
            line += std::to_string(lt.positions[i]);
        }
        line += "]";
        line += lic_event;
        line += ",\"root\":\"" + to_hex(notes_.root().to_bytes()) + "\"}";
        event_log_.push_back(std::move(line));

        tx_order_.push_back(tx.tx_hash);
        tx_log_.emplace(tx.tx_hash, std::move(lt));
        height_++;
    }

    Scalar gas_fee_;
    MerkleTree notes_;
    MerkleTree license_nullifiers_;
    std::set<Scalar, ScalarLess> spent_;
    std::set<Scalar, ScalarLess> license_seen_;
    std::vector<Scalar> tx_order_;
    std::map<Scalar, LoggedTx, ScalarLess> tx_log_;
    std::map<uint64_t, Note> notes_by_pos_;
    std::vector<std::string> event_log_;
    uint64_t height_ = 0;
};

}  // namespace citadel
