// Regenerates the frozen fixtures under vectors/. Everything here is
// seeded, so reruns are byte-identical; the test suite fails if the
// committed fixtures drift from what this produces.

#include <filesystem>
#include <fstream>
#include <iostream>

#include <json.hpp>

#include "citadel/backend.hpp"
#include "citadel/jsonio.hpp"
#include "citadel/wallet.hpp"

namespace fs = std::filesystem;
using namespace citadel;
using nlohmann::json;

namespace {

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream f(p, std::ios::trunc);
    if (!f) throw Error("io", "cannot write " + p.string());
    f << text;
    if (!text.empty() && text.back() != '\n') f << "\n";
}

void write_doc(const fs::path& p, const json& doc) { write_text(p, doc.dump(2)); }

void write_bytes(const fs::path& p, const Bytes& b) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw Error("io", "cannot write " + p.string());
    f.write(reinterpret_cast<const char*>(b.data()), b.size());
}

std::string hex_bytes(std::string_view s) {
    return to_hex({reinterpret_cast<const uint8_t*>(s.data()), s.size()});
}

json hash_vectors() {
    json fast = json::array();
    for (std::string_view msg : {std::string_view(""), std::string_view("abc"),
                                 std::string_view("citadel")}) {
        fast.push_back({{"input", hex_bytes(msg)},
                        {"output", json_scalar(hash_fast(
                                       {reinterpret_cast<const uint8_t*>(msg.data()),
                                        msg.size()}))}});
    }
    json sponge = json::array();
    auto add_case = [&](std::string domain, std::vector<uint64_t> xs) {
        std::vector<Fq> elems;
        for (uint64_t x : xs) elems.push_back(Fq::from_u64(x));
        json inputs = json::array();
        for (uint64_t x : xs) inputs.push_back(x);
        sponge.push_back({{"domain", domain},
                          {"inputs", inputs},
                          {"output", json_scalar(hash_sponge_tagged(domain, elems))}});
    };
    add_case("", {1});
    add_case("", {1, 2});
    add_case("", {1, 2, 3, 4});
    add_case("", {1, 2, 3, 4, 5});
    add_case("", {0, 0, 0, 0, 0, 0, 0, 0, 0});
    add_case("tx-hash", {1, 2});
    add_case("note-mint", {7});
    return {{"fast", fast},
            {"sponge", sponge},
            {"empty_leaf", json_scalar(merkle_empty_leaf())},
            {"tombstone", json_scalar(merkle_tombstone())}};
}

json group_vectors() {
    const GroupElement& g = generator();
    const GroupElement& gp = generator_prime();
    Scalar k = Scalar::from_u64(12345);
    json mul = {{"k", 12345},
                {"kG", json_point(g.mul(k))},
                {"kG_prime", json_point(gp.mul(k))}};
    return {{"G", json_point(g)},
            {"G_prime", json_point(gp)},
            {"2G", json_point(g.doubled())},
            {"G_plus_Gprime", json_point(g + gp)},
            {"mul", mul},
            {"hash_to_group",
             {{"tag", hex_bytes("vector/test-point")},
              {"point", json_point(GroupElement::hash_to_group("vector/test-point"))}}}};
}

json commit_vectors() {
    json cases = json::array();
    struct Case {
        uint64_t v, s;
    };
    for (Case c : {Case{0, 0}, Case{5, 7}, Case{1, 0}, Case{0, 1}}) {
        GroupElement com =
            commit(default_commit_key(), Scalar::from_u64(c.v), Scalar::from_u64(c.s));
        cases.push_back({{"v", c.v}, {"s", c.s}, {"com", json_point(com)}});
    }
    return {{"cases", cases}};
}

json sign_vectors() {
    SeededRng rng(11);
    Scalar sk = Scalar::random_nonzero(rng);
    GroupElement pk = mul_gen(sk);
    GroupElement pk_prime = mul_gen_prime(sk);
    Scalar m = Scalar::from_u64(424242);
    Signature sig = sign_single(sk, m, rng);
    DoubleSignature dsig = sign_double(sk, m, rng);
    return {{"seed", 11},
            {"sk", json_scalar(sk)},
            {"pk", json_point(pk)},
            {"pk_prime", json_point(pk_prime)},
            {"message", json_scalar(m)},
            {"single", {{"R", json_point(sig.r)}, {"u", json_scalar(sig.u)}}},
            {"double",
             {{"R", json_point(dsig.r)},
              {"R_prime", json_point(dsig.r_prime)},
              {"u", json_scalar(dsig.u)}}}};
}

json key_vectors() {
    SeededRng rng(12);
    StaticKeys keys = gen_static_keys(rng);
    auto [nkp, r_eph] = gen_note_keypair(keys.pk, rng);
    auto nsk = recover_note_secret(keys, nkp.npk, nkp.r);
    if (!nsk) throw Error("internal", "derivation mismatch");
    return {{"seed", 12},
            {"a", json_scalar(keys.a)},
            {"b", json_scalar(keys.b)},
            {"A", json_point(keys.pk.a)},
            {"B", json_point(keys.pk.b)},
            {"r", json_scalar(r_eph)},
            {"R", json_point(nkp.r)},
            {"npk", json_point(nkp.npk)},
            {"nsk", json_scalar(nsk->nsk)},
            {"npk_prime", json_point(nsk->npk_prime)}};
}

json merkle_vectors() {
    json trees = json::array();
    for (auto [arity, depth] : {std::pair<uint32_t, uint32_t>{2, 3}, {4, 3}, {4, 17}}) {
        MerkleTree t(arity, depth);
        json roots = json::array();
        roots.push_back(json_scalar(t.root()));
        uint64_t n = std::min<uint64_t>(8, t.capacity());
        for (uint64_t i = 0; i < n; i++) {
            auto [pos, root] = t.append(Scalar::from_u64(i + 1));
            (void)pos;
            roots.push_back(json_scalar(root));
        }
        MerkleProof proof = t.prove(2);
        ByteWriter w;
        proof.serialize(w);
        trees.push_back({{"arity", arity},
                         {"depth", depth},
                         {"roots_after_append", roots},
                         {"proof_pos2", json_merkle_proof(proof)},
                         {"proof_pos2_bytes", to_hex(w.take())}});
    }
    return {{"trees", trees}};
}

json note_vectors() {
    SeededRng rng(13);
    StaticKeys keys = gen_static_keys(rng);
    auto [note, opening] = mint_value_note(keys.pk, Scalar::from_u64(900), true, rng);
    note.pos = 5;
    auto nsk = recover_note_secret(keys, note.npk, note.r);
    if (!nsk) throw Error("internal", "derivation mismatch");
    ByteWriter w;
    note.serialize(w);
    return {{"seed", 13},
            {"note", json_note(note)},
            {"note_bytes", to_hex(w.take())},
            {"opening", {{"v", 900}, {"s", json_scalar(opening.s)}}},
            {"note_hash", json_scalar(note_hash(note))},
            {"nullifier", json_scalar(compute_nullifier(*nsk, *note.pos).value)}};
}

// A short seeded scenario: faucet, a payment, then a full license lifecycle.
// The interesting accepted transactions are frozen as binary envelopes.
void tx_vectors(const fs::path& dir) {
    SeededRng rng(14);
    TransparentBackend backend;
    Ledger ledger(Scalar::from_u64(1), 4, 17);
    Wallet user = Wallet::create(rng);
    Wallet sp = Wallet::create(rng);

    ledger.faucet(user.keys.pk, Scalar::from_u64(1000), rng);
    user.sync(ledger);
    Transaction pay_tx =
        user.pay(sp.keys.pk, Scalar::from_u64(100), true, ledger, backend, rng);
    Receipt pay_r = ledger.submit(pay_tx, backend, backend);
    user.sync(ledger);

    auto req = user.request_license(sp.address().pk, Scalar::from_u64(50), ledger, backend,
                                    rng);
    Receipt req_r = ledger.submit(req.tx, backend, backend);
    user.sync(ledger);
    sp.sync(ledger);

    Transaction issue_tx = sp.issue_license_for(sp.requests.at(0).first,
                                                Scalar::from_u64(20260815), ledger, backend,
                                                rng);
    Receipt issue_r = ledger.submit(issue_tx, backend, backend);
    sp.sync(ledger);
    user.sync(ledger);

    uint64_t lic_pos = user.licenses.at(0).pos;
    auto use = user.use_license_at(lic_pos, sp.lic_pk, Scalar::from_u64(77),
                                   sp.address().pk, ledger, backend, backend, rng);
    Receipt use_r = ledger.submit(use.tx, backend, backend);
    if (!pay_r.accepted || !req_r.accepted || !issue_r.accepted || !use_r.accepted)
        throw Error("internal", "scenario tx rejected");

    auto freeze = [&](const std::string& name, const Transaction& tx) {
        ByteWriter w;
        tx.serialize(w);
        Bytes blob = w.take();
        write_bytes(dir / (name + ".bin"), blob);
        json j = json_transaction(tx);
        j["bytes"] = blob.size();
        write_doc(dir / (name + ".json"), j);
    };
    freeze("pay", pay_tx);
    freeze("request", req.tx);
    freeze("issue", issue_tx);
    freeze("use", use.tx);

    ServiceRequest sreq = request_service(use.tx.tx_hash, sp.lic_pk,
                                          Scalar::from_u64(20260815), Scalar::from_u64(77),
                                          use.sc);
    write_doc(dir / "service-request.json", json_service_request(sreq));
}

}  // namespace

int main(int argc, char** argv) {
    fs::path dir = argc > 1 ? argv[1] : "vectors";
    fs::create_directories(dir / "tx");
    write_doc(dir / "hash.json", hash_vectors());
    write_doc(dir / "group.json", group_vectors());
    write_doc(dir / "commit.json", commit_vectors());
    write_doc(dir / "sign.json", sign_vectors());
    write_doc(dir / "keys.json", key_vectors());
    write_doc(dir / "merkle.json", merkle_vectors());
    write_doc(dir / "notes.json", note_vectors());
    tx_vectors(dir / "tx");
    std::cout << "wrote fixtures to " << dir << "\n";
    return 0;
}
