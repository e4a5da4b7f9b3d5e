#pragma once

#include <json.hpp>

#include "citadel/ledger.hpp"
#include "citadel/wallet.hpp"

// JSON views of the protocol objects: hex for field/group encodings,
// structured objects elsewhere. Secret material never passes through here.
namespace citadel {

using nlohmann::json;

inline json json_scalar(const Scalar& s) { return to_hex(s.to_bytes()); }
inline json json_point(const GroupElement& p) { return to_hex(p.encode()); }

inline std::optional<Scalar> scalar_from_json(const json& j) {
    if (!j.is_string()) return std::nullopt;
    auto raw = from_hex(j.get<std::string>());
    if (!raw || raw->size() != 32) return std::nullopt;
    return Scalar::from_bytes(*raw);
}

inline std::optional<GroupElement> point_from_json(const json& j) {
    if (!j.is_string()) return std::nullopt;
    auto raw = from_hex(j.get<std::string>());
    if (!raw || raw->size() != 32) return std::nullopt;
    return GroupElement::decode(*raw);
}

inline json json_note(const Note& n) {
    json j;
    j["type"] = static_cast<int>(n.type);
    if (n.com) j["com"] = json_point(*n.com);
    if (n.pos) j["pos"] = *n.pos;
    j["nonce"] = json_scalar(n.nonce);
    j["enc"] = to_hex(n.enc);
    j["npk"] = json_point(n.npk);
    j["R"] = json_point(n.r);
    return j;
}

inline json json_merkle_proof(const MerkleProof& p) {
    json levels = json::array();
    for (const auto& level : p.siblings) {
        json row = json::array();
        for (const auto& s : level) row.push_back(json_scalar(s));
        levels.push_back(row);
    }
    return json{{"leaf", json_scalar(p.leaf)},
                {"pos", p.pos},
                {"siblings", levels},
                {"child_indices", p.child_indices}};
}

inline std::optional<MerkleProof> merkle_proof_from_json(const json& j) {
    MerkleProof p;
    auto leaf = scalar_from_json(j.value("leaf", json()));
    if (!leaf || !j.contains("pos") || !j.contains("siblings") ||
        !j.contains("child_indices")) {
        return std::nullopt;
    }
    p.leaf = *leaf;
    p.pos = j["pos"].get<uint64_t>();
    for (const auto& row : j["siblings"]) {
        std::vector<Scalar> level;
        for (const auto& cell : row) {
            auto s = scalar_from_json(cell);
            if (!s) return std::nullopt;
            level.push_back(*s);
        }
        p.siblings.push_back(std::move(level));
    }
    p.child_indices = j["child_indices"].get<std::vector<uint32_t>>();
    return p;
}

// The public transaction view. Proof bytes are summarized by size, not
// dumped: they are bulky and carry no information a reader can check.
inline json json_transaction(const Transaction& tx) {
    json j;
    j["tx_hash"] = json_scalar(tx.tx_hash);
    j["gas"] = json_scalar(tx.gas);
    json spends = json::array();
    for (const auto& nf : tx.spends) spends.push_back(json_scalar(nf.value));
    j["nullifiers"] = spends;
    json mints = json::array();
    for (const auto& m : tx.mints) mints.push_back(json_note(m));
    j["mints"] = mints;
    json st;
    st["notes_root"] = json_scalar(tx.statement.notes_root);
    st["spend_types"] = tx.statement.spend_types;
    json coms = json::array();
    for (const auto& c : tx.statement.mint_commitments) coms.push_back(json_point(c));
    st["mint_commitments"] = coms;
    j["statement"] = st;
    j["proof_bytes"] = tx.proof.size();
    if (tx.contract_call) {
        j["contract_call"] = {{"kind", tx.contract_call->kind},
                              {"body_bytes", tx.contract_call->body.size()},
                              {"proof_bytes", tx.contract_call->proof.size()}};
    }
    return j;
}

inline json json_receipt(const Receipt& r) {
    json j;
    j["tx_hash"] = json_scalar(r.tx_hash);
    j["accepted"] = r.accepted;
    if (r.accepted) {
        j["positions"] = r.positions;
        if (r.sc_pos) j["sc_pos"] = *r.sc_pos;
    } else {
        j["reject_reason"] = r.reject_reason;
    }
    return j;
}

inline json json_service_request(const ServiceRequest& req) {
    return json{{"version", 1},
                {"tx_hash", json_scalar(req.tx_hash)},
                {"lic_pk", json_point(req.lic_pk)},
                {"attr", json_scalar(req.attr)},
                {"c", json_scalar(req.c)},
                {"sc",
                 {{"s0", json_scalar(req.sc.s0)},
                  {"s1", json_scalar(req.sc.s1)},
                  {"s2", json_scalar(req.sc.s2)}}}};
}

inline std::optional<ServiceRequest> service_request_from_json(const json& j) {
    if (j.value("version", 0) != 1 || !j.contains("sc")) return std::nullopt;
    auto tx_hash = scalar_from_json(j.value("tx_hash", json()));
    auto lic_pk = point_from_json(j.value("lic_pk", json()));
    auto attr = scalar_from_json(j.value("attr", json()));
    auto c = scalar_from_json(j.value("c", json()));
    auto s0 = scalar_from_json(j["sc"].value("s0", json()));
    auto s1 = scalar_from_json(j["sc"].value("s1", json()));
    auto s2 = scalar_from_json(j["sc"].value("s2", json()));
    if (!tx_hash || !lic_pk || !attr || !c || !s0 || !s1 || !s2) return std::nullopt;
    return ServiceRequest{*tx_hash, *lic_pk, *attr, *c, {*s0, *s1, *s2}};
}

}  // namespace citadel
