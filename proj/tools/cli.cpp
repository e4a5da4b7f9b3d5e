// citadel command-line driver. Every command prints one JSON document to
// stdout; human-readable diagnostics go to stderr. Exit codes: 0 success,
// 1 usage or config error, 2 validation failure, 3 policy rejection,
// 4 I/O error.

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "citadel/backend.hpp"
#include "citadel/jsonio.hpp"
#include "citadel/wallet.hpp"

namespace {

using namespace citadel;
using nlohmann::json;

constexpr int kOk = 0;
constexpr int kUsage = 1;
constexpr int kValidation = 2;
constexpr int kPolicy = 3;
constexpr int kIo = 4;

int exit_code_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "io" || c == "corrupt" || c == "version" || c == "passphrase") return kIo;
    return kValidation;
}

struct Failure {
    int code;
    std::string kind;
    std::string message;
};

[[noreturn]] void fail(int code, std::string kind, std::string message) {
    throw Failure{code, std::move(kind), std::move(message)};
}

void emit(const json& doc) { std::cout << doc.dump(2) << "\n"; }

json json_amount(const Scalar& v) {
    if (auto u = v.to_u64()) return *u;
    return to_hex(v.to_bytes());
}

// Advisory lock guarding ledger mutation; readers take it shared.
class FileLock {
public:
    FileLock(const std::string& target, bool exclusive) : path_(target + ".lock") {
        fd_ = ::open(path_.c_str(), O_CREAT | O_RDWR | O_CLOEXEC, 0644);
        if (fd_ < 0) fail(kIo, "io", "cannot open lock file " + path_);
        if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
            ::close(fd_);
            fd_ = -1;
            fail(kIo, "io", "cannot acquire lock on " + path_);
        }
    }
    ~FileLock() {
        if (fd_ >= 0) {
            ::flock(fd_, LOCK_UN);
            ::close(fd_);
        }
    }
    FileLock(const FileLock&) = delete;
    FileLock& operator=(const FileLock&) = delete;

private:
    std::string path_;
    int fd_ = -1;
};

struct Settings {
    std::string ledger_path = "citadel-ledger.bin";
    std::string wallet_path = "citadel-wallet.bin";
    std::string passphrase;
    std::string backend = "transparent";
    uint64_t gas = 1;
    uint32_t arity = 4;
    uint32_t depth = 17;
    uint64_t seed = 0;
    bool seeded = false;
};

struct Context {
    Settings s;
    TransparentBackend backend;

    std::unique_ptr<Rng> rng() const {
        if (s.seeded) return std::unique_ptr<Rng>(new SeededRng(s.seed));
        return std::unique_ptr<Rng>(new SystemRng());
    }

    Ledger open_ledger(bool create_if_missing) const {
        if (std::filesystem::exists(s.ledger_path)) return Ledger::restore(s.ledger_path);
        if (!create_if_missing) fail(kIo, "io", "ledger file not found: " + s.ledger_path);
        return Ledger(Scalar::from_u64(s.gas), s.arity, s.depth);
    }

    Wallet load_wallet() const { return Wallet::load(s.wallet_path, s.passphrase); }
    void save_wallet(const Wallet& w) const { w.save(s.wallet_path, s.passphrase); }
};

Address parse_address(const std::string& hex) {
    auto a = Address::decode(hex);
    if (!a) fail(kValidation, "bad-address", "malformed address: " + hex);
    return *a;
}

// Persist ledger and wallet only after acceptance, then report the receipt.
int finish_submit(Context& ctx, Ledger& ledger, Wallet& w, const Receipt& r,
                  json extra = json::object()) {
    json out = json_receipt(r);
    for (auto& [k, v] : extra.items()) out[k] = v;
    if (!r.accepted) {
        emit(out);
        std::cerr << "rejected: " << r.reject_reason << "\n";
        return kValidation;
    }
    ledger.persist(ctx.s.ledger_path);
    w.sync(ledger);
    ctx.save_wallet(w);
    emit(out);
    return kOk;
}

std::optional<uint64_t> nft_mint_position(const Transaction& tx, const Receipt& r) {
    for (size_t i = 0; i < tx.mints.size() && i < r.positions.size(); i++) {
        if (tx.mints[i].type == NoteType::ObfuscatedNft) return r.positions[i];
    }
    return std::nullopt;
}

json licenses_json(const Wallet& w, const Ledger& ledger) {
    json arr = json::array();
    for (const auto& lic : w.licenses) {
        arr.push_back({{"id", lic.pos},
                       {"attr", json_amount(lic.payload.attr)},
                       {"revoked", ledger.note_invalidated(lic.pos)}});
    }
    return arr;
}

int cmd_keygen(Context& ctx, bool force) {
    if (!force && std::filesystem::exists(ctx.s.wallet_path)) {
        fail(kIo, "io", "wallet file already exists: " + ctx.s.wallet_path);
    }
    auto rng = ctx.rng();
    Wallet w = Wallet::create(*rng);
    ctx.save_wallet(w);
    emit({{"address", w.address().encode()}, {"wallet", ctx.s.wallet_path}});
    return kOk;
}

int cmd_address(Context& ctx) {
    Wallet w = ctx.load_wallet();
    emit({{"address", w.address().encode()}});
    return kOk;
}

int cmd_faucet(Context& ctx, uint64_t amount) {
    FileLock lock(ctx.s.ledger_path, true);
    Ledger ledger = ctx.open_ledger(true);
    Wallet w = ctx.load_wallet();
    auto rng = ctx.rng();
    Receipt r = ledger.faucet(w.keys.pk, Scalar::from_u64(amount), *rng);
    ledger.persist(ctx.s.ledger_path);
    w.sync(ledger);
    ctx.save_wallet(w);
    json out = json_receipt(r);
    out["balance"] = json_amount(w.balance());
    emit(out);
    return kOk;
}

int cmd_send(Context& ctx, const std::string& addr, uint64_t amount,
             bool transparent) {
    FileLock lock(ctx.s.ledger_path, true);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.sync(ledger);
    Address to = parse_address(addr);
    auto rng = ctx.rng();
    Transaction tx =
        w.pay(to.pk, Scalar::from_u64(amount), !transparent, ledger, ctx.backend, *rng);
    Receipt r = ledger.submit(tx, ctx.backend, ctx.backend);
    return finish_submit(ctx, ledger, w, r);
}

int cmd_request_license(Context& ctx, const std::string& sp_addr, uint64_t price) {
    FileLock lock(ctx.s.ledger_path, true);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.sync(ledger);
    Address sp = parse_address(sp_addr);
    auto rng = ctx.rng();
    auto res = w.request_license(sp.pk, Scalar::from_u64(price), ledger, ctx.backend, *rng);
    Receipt r = ledger.submit(res.tx, ctx.backend, ctx.backend);
    json extra = json::object();
    if (r.accepted) {
        if (auto pos = nft_mint_position(res.tx, r)) extra["request_pos"] = *pos;
    }
    return finish_submit(ctx, ledger, w, r, extra);
}

int cmd_issue_license(Context& ctx, uint64_t request_id, uint64_t attr) {
    FileLock lock(ctx.s.ledger_path, true);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.sync(ledger);
    const LicenseRequest* req = nullptr;
    for (const auto& [cand, pos] : w.requests) {
        if (pos == request_id) {
            req = &cand;
            break;
        }
    }
    if (!req) fail(kValidation, "unknown-request", "no license request at this position");
    auto rng = ctx.rng();
    Transaction tx =
        w.issue_license_for(*req, Scalar::from_u64(attr), ledger, ctx.backend, *rng);
    Receipt r = ledger.submit(tx, ctx.backend, ctx.backend);
    json extra = json::object();
    if (r.accepted) {
        if (auto pos = nft_mint_position(tx, r)) extra["license_pos"] = *pos;
    }
    return finish_submit(ctx, ledger, w, r, extra);
}

int cmd_licenses(Context& ctx) {
    FileLock lock(ctx.s.ledger_path, false);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.sync(ledger);
    ctx.save_wallet(w);
    emit({{"licenses", licenses_json(w, ledger)}});
    return kOk;
}

int cmd_use_license(Context& ctx, uint64_t id, uint64_t challenge,
                    const std::string& sp_addr, const std::string& out_path) {
    FileLock lock(ctx.s.ledger_path, true);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.sync(ledger);
    Address sp = parse_address(sp_addr);
    const FetchedLicense* lic = w.license_at(id);
    if (!lic) fail(kValidation, "unknown-license", "no license cached at this position");
    Scalar attr = lic->payload.attr;
    Scalar c = Scalar::from_u64(challenge);
    auto rng = ctx.rng();
    auto res =
        w.use_license_at(id, sp.lic_pk, c, sp.pk, ledger, ctx.backend, ctx.backend, *rng);
    Receipt r = ledger.submit(res.tx, ctx.backend, ctx.backend);

    json extra = json::object();
    if (r.accepted) {
        ServiceRequest sreq = request_service(res.tx.tx_hash, sp.lic_pk, attr, c, res.sc);
        json sr = json_service_request(sreq);
        extra["service_request"] = sr;
        if (!out_path.empty()) {
            std::ofstream f(out_path, std::ios::trunc);
            if (!f) fail(kIo, "io", "cannot write " + out_path);
            f << sr.dump(2) << "\n";
            if (!f) fail(kIo, "io", "short write to " + out_path);
        }
    }
    return finish_submit(ctx, ledger, w, r, extra);
}

int cmd_grant_service(Context& ctx, const std::string& request_file,
                      std::optional<uint64_t> require_attr) {
    FileLock lock(ctx.s.ledger_path, false);
    std::ifstream f(request_file);
    if (!f) fail(kIo, "io", "cannot open " + request_file);
    json doc = json::parse(f, nullptr, false);
    if (doc.is_discarded()) fail(kValidation, "bad-request", "service request is not JSON");
    auto req = service_request_from_json(doc);
    if (!req) fail(kValidation, "bad-request", "service request fields missing or malformed");

    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    auto record = ledger.find_license_call(req->tx_hash);
    ServicePolicy policy = [&](const Scalar& attr, const Scalar&) {
        return !require_attr || attr == Scalar::from_u64(*require_attr);
    };
    GrantResult g = grant_service(w.sp_keys(), *req, record, policy);
    json out{{"granted", g.granted}};
    if (!g.granted) out["reason"] = g.reason;
    emit(out);
    if (g.granted) return kOk;
    std::cerr << "denied: " << g.reason << "\n";
    return g.reason == "policy" ? kPolicy : kValidation;
}

int cmd_ledger_root(Context& ctx) {
    FileLock lock(ctx.s.ledger_path, false);
    Ledger ledger = ctx.open_ledger(false);
    emit({{"root", json_scalar(ledger.notes().root())},
          {"license_root", json_scalar(ledger.license_nullifiers().root())},
          {"height", ledger.height()},
          {"notes", ledger.notes().size()},
          {"gas", json_amount(ledger.gas_fee())}});
    return kOk;
}

int cmd_ledger_tx(Context& ctx, const std::string& hash_hex) {
    FileLock lock(ctx.s.ledger_path, false);
    auto raw = from_hex(hash_hex);
    if (!raw || raw->size() != 32) fail(kValidation, "bad-hash", "expected 64 hex chars");
    auto h = Scalar::from_bytes(*raw);
    if (!h) fail(kValidation, "bad-hash", "not a canonical scalar");
    Ledger ledger = ctx.open_ledger(false);
    const LoggedTx* lt = ledger.find_tx(*h);
    if (!lt) fail(kValidation, "unknown-tx", "no transaction with this hash");
    json out = json_transaction(lt->tx);
    out["height"] = lt->height;
    out["positions"] = lt->positions;
    if (lt->sc_pos) out["sc_pos"] = *lt->sc_pos;
    out["faucet"] = lt->faucet;
    emit(out);
    return kOk;
}

int cmd_ledger_nullifiers(Context& ctx) {
    FileLock lock(ctx.s.ledger_path, false);
    Ledger ledger = ctx.open_ledger(false);
    json spent = json::array();
    for (const auto& h : ledger.tx_order()) {
        for (const auto& nf : ledger.find_tx(h)->tx.spends) {
            spent.push_back(json_scalar(nf.value));
        }
    }
    json lic = json::array();
    const MerkleTree& t = ledger.license_nullifiers();
    for (uint64_t i = 0; i < t.size(); i++) lic.push_back(json_scalar(t.leaf(i)));
    emit({{"spent", spent}, {"license", lic}});
    return kOk;
}

int cmd_rescan(Context& ctx) {
    FileLock lock(ctx.s.ledger_path, false);
    Ledger ledger = ctx.open_ledger(false);
    Wallet w = ctx.load_wallet();
    w.rescan(ledger);
    ctx.save_wallet(w);
    json ids = json::array();
    for (const auto& lic : w.licenses) ids.push_back(lic.pos);
    emit({{"balance", json_amount(w.balance())},
          {"notes", w.notes.size()},
          {"licenses", ids},
          {"requests", w.requests.size()}});
    return kOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"citadel: private license credentials on a UTXO ledger simulator"};
    app.require_subcommand(1);
    app.fallthrough();  // global options may follow the subcommand name
    Context ctx;
    Settings& s = ctx.s;

    app.set_config("--config", "", "key=value config file")->envname("CITADEL_CONFIG");
    app.allow_config_extras(CLI::config_extras_mode::error);
    app.add_option("--ledger", s.ledger_path, "ledger state file")
        ->envname("CITADEL_LEDGER")
        ->capture_default_str();
    app.add_option("--wallet", s.wallet_path, "wallet file")
        ->envname("CITADEL_WALLET")
        ->capture_default_str();
    app.add_option("--passphrase", s.passphrase, "wallet passphrase")
        ->envname("CITADEL_PASSPHRASE");
    app.add_option("--gas", s.gas, "flat fee for a new ledger")->capture_default_str();
    app.add_option("--arity", s.arity, "tree arity for a new ledger")
        ->check(CLI::Range(2u, 16u))
        ->capture_default_str();
    app.add_option("--depth", s.depth, "tree depth for a new ledger")
        ->check(CLI::Range(1u, 40u))
        ->capture_default_str();
    app.add_option("--backend", s.backend, "proof backend")
        ->check(CLI::IsMember({"transparent"}))
        ->capture_default_str();
    auto* seed_opt =
        app.add_option("--seed", s.seed, "deterministic randomness (testing only)");

    auto* keygen = app.add_subcommand("keygen", "create a new wallet");
    bool force = false;
    keygen->add_flag("--force", force, "overwrite an existing wallet file");

    app.add_subcommand("address", "print the wallet address");

    auto* faucet = app.add_subcommand("faucet", "mint simulation funds to this wallet");
    uint64_t amount = 0;
    faucet->add_option("amount", amount, "value to mint")->required();

    auto* send = app.add_subcommand("send", "pay another address");
    std::string send_addr;
    uint64_t send_amount = 0;
    bool send_transparent = false;
    send->add_option("addr", send_addr, "recipient address")->required();
    send->add_option("amount", send_amount, "value to send")->required();
    send->add_flag("--transparent", send_transparent, "mint a transparent output");

    auto* reqlic = app.add_subcommand("request-license", "pay an SP for a license");
    std::string sp_addr;
    uint64_t price = 0;
    reqlic->add_option("sp", sp_addr, "service provider address")->required();
    reqlic->add_option("price", price, "license price")->required();

    auto* issue = app.add_subcommand("issue-license", "answer a license request (SP)");
    uint64_t request_id = 0;
    uint64_t attr = 0;
    issue->add_option("request-id", request_id, "request note position")->required();
    issue->add_option("attr", attr, "attribute to certify")->required();

    app.add_subcommand("licenses", "list licenses held by this wallet");

    auto* uselic = app.add_subcommand("use-license", "spend a license use on-chain");
    uint64_t license_id = 0;
    uint64_t challenge = 0;
    std::string use_sp_addr;
    std::string out_path;
    uselic->add_option("id", license_id, "license note position")->required();
    uselic->add_option("--challenge", challenge, "event challenge (0 = single-use)")
        ->capture_default_str();
    uselic->add_option("--sp", use_sp_addr, "service provider address")->required();
    uselic->add_option("--out", out_path, "write the service request JSON here");

    auto* grant = app.add_subcommand("grant-service", "check a service request (SP)");
    std::string request_file;
    uint64_t require_attr = 0;
    grant->add_option("request", request_file, "service-request.json path")->required();
    auto* ra_opt = grant->add_option("--require-attr", require_attr,
                                     "policy: attribute must equal this value");

    auto* ledger_cmd = app.add_subcommand("ledger", "inspect the ledger");
    ledger_cmd->require_subcommand(1);
    ledger_cmd->add_subcommand("root", "current roots and height");
    auto* ltx = ledger_cmd->add_subcommand("tx", "look up a transaction");
    std::string tx_hash_hex;
    ltx->add_option("hash", tx_hash_hex, "transaction hash (hex)")->required();
    ledger_cmd->add_subcommand("nullifiers", "list spent and license nullifiers");

    app.add_subcommand("rescan", "rebuild the wallet cache from the ledger");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n";
        emit({{"error", {{"kind", "usage"}, {"message", e.what()}}}});
        return kUsage;
    }
    s.seeded = seed_opt->count() > 0;
    std::optional<uint64_t> require_attr_opt;
    if (ra_opt->count() > 0) require_attr_opt = require_attr;

    try {
        if (app.got_subcommand(keygen)) return cmd_keygen(ctx, force);
        if (app.got_subcommand("address")) return cmd_address(ctx);
        if (app.got_subcommand(faucet)) return cmd_faucet(ctx, amount);
        if (app.got_subcommand(send))
            return cmd_send(ctx, send_addr, send_amount, send_transparent);
        if (app.got_subcommand(reqlic)) return cmd_request_license(ctx, sp_addr, price);
        if (app.got_subcommand(issue)) return cmd_issue_license(ctx, request_id, attr);
        if (app.got_subcommand("licenses")) return cmd_licenses(ctx);
        if (app.got_subcommand(uselic))
            return cmd_use_license(ctx, license_id, challenge, use_sp_addr, out_path);
        if (app.got_subcommand(grant))
            return cmd_grant_service(ctx, request_file, require_attr_opt);
        if (app.got_subcommand(ledger_cmd)) {
            if (ledger_cmd->got_subcommand("root")) return cmd_ledger_root(ctx);
            if (ledger_cmd->got_subcommand(ltx)) return cmd_ledger_tx(ctx, tx_hash_hex);
            return cmd_ledger_nullifiers(ctx);
        }
        if (app.got_subcommand("rescan")) return cmd_rescan(ctx);
        std::cerr << "no command\n";
        return kUsage;
    } catch (const Failure& f) {
        std::cerr << f.message << "\n";
        emit({{"error", {{"kind", f.kind}, {"message", f.message}}}});
        return f.code;
    } catch (const Error& e) {
        std::cerr << e.what() << "\n";
        emit({{"error", {{"kind", e.code()}, {"message", e.what()}}}});
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << e.what() << "\n";
        emit({{"error", {{"kind", "internal"}, {"message", e.what()}}}});
        return kValidation;
    }
}
