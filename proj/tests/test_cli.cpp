// End-to-end tests that drive the installed CLI binary as a subprocess.
// Each test gets a scratch directory; wallets and the ledger live there and
// every byte of captured output is kept for the secrets sweep at the end.

#include <gtest/gtest.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>

#include "citadel/jsonio.hpp"
#include "citadel/wallet.hpp"

using namespace citadel;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

struct RunResult {
    int exit = -1;
    std::string out;
    std::string err;
    json doc;
    bool has_doc = false;

    const json& at(const char* key) const { return doc.at(key); }
    std::string error_kind() const { return doc.at("error").at("kind").get<std::string>(); }
};

struct CliBox {
    fs::path dir;
    fs::path ledger;
    std::string transcript;

    CliBox() {
        static int counter = 0;
        dir = fs::temp_directory_path() /
              ("citadel-cli-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
        fs::create_directories(dir);
        ledger = dir / "ledger.bin";
    }
    ~CliBox() {
        std::error_code ec;
        fs::remove_all(dir, ec);
    }

    fs::path wallet(const std::string& who) const { return dir / (who + ".wallet"); }
    static std::string pass(const std::string& who) { return who + "-pw"; }

    RunResult raw(const std::string& cmdline) {
        fs::path of = dir / ".out";
        fs::path ef = dir / ".err";
        std::string full = cmdline + " >'" + of.string() + "' 2>'" + ef.string() + "'";
        int rc = std::system(full.c_str());
        RunResult r;
        r.exit = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
        r.out = slurp(of);
        r.err = slurp(ef);
        transcript += r.out;
        transcript += r.err;
        json d = json::parse(r.out, nullptr, false);
        if (!d.is_discarded()) {
            r.doc = std::move(d);
            r.has_doc = true;
        }
        return r;
    }

    RunResult run(const std::string& who, const std::string& args,
                  const std::string& passphrase = "") {
        std::string pw = passphrase.empty() ? pass(who) : passphrase;
        std::string cmd = "env CITADEL_LEDGER='" + ledger.string() + "' CITADEL_WALLET='" +
                          wallet(who).string() + "' CITADEL_PASSPHRASE='" + pw + "' '" +
                          CITADEL_CLI_BIN "' " + args;
        return raw(cmd);
    }
};

// Plays the whole protocol through the CLI so several tests can reuse it.
struct Story {
    std::string alice;
    std::string bob;
    std::string sp;
    std::string pay_hash;
    uint64_t license_pos = 0;
    fs::path sr_file;

    static Story play(CliBox& box) {
        Story st;
        st.alice = box.run("alice", "keygen --seed 101").at("address");
        st.bob = box.run("bob", "keygen --seed 102").at("address");
        st.sp = box.run("sp", "keygen --seed 103").at("address");

        EXPECT_EQ(box.run("alice", "faucet 1000 --seed 104").exit, 0);
        EXPECT_EQ(box.run("sp", "faucet 50 --seed 105").exit, 0);

        auto send = box.run("alice", "send " + st.bob + " 100 --seed 106");
        EXPECT_EQ(send.exit, 0);
        st.pay_hash = send.at("tx_hash");

        auto req = box.run("alice", "request-license " + st.sp + " 50 --seed 107");
        EXPECT_EQ(req.exit, 0);
        uint64_t req_pos = req.at("request_pos");

        auto iss = box.run("sp", "issue-license " + std::to_string(req_pos) + " 777 --seed 108");
        EXPECT_EQ(iss.exit, 0);
        st.license_pos = iss.at("license_pos");

        st.sr_file = box.dir / "service-request.json";
        auto use = box.run("alice", "use-license " + std::to_string(st.license_pos) +
                                        " --challenge 5 --sp " + st.sp + " --out '" +
                                        st.sr_file.string() + "' --seed 109");
        EXPECT_EQ(use.exit, 0);
        return st;
    }
};

TEST(Cli, PaymentLifecycle) {
    CliBox box;

    auto kg = box.run("alice", "keygen --seed 1");
    ASSERT_EQ(kg.exit, 0);
    ASSERT_TRUE(kg.has_doc);
    std::string alice = kg.at("address");
    EXPECT_EQ(alice.size(), 192u);
    EXPECT_EQ(kg.at("wallet").get<std::string>(), box.wallet("alice").string());
    EXPECT_TRUE(fs::exists(box.wallet("alice")));

    // refuses to clobber an existing wallet unless forced
    auto clobber = box.run("alice", "keygen --seed 2");
    EXPECT_EQ(clobber.exit, 4);
    EXPECT_EQ(clobber.error_kind(), "io");
    auto forced = box.run("alice", "keygen --force --seed 3");
    ASSERT_EQ(forced.exit, 0);
    alice = forced.at("address").get<std::string>();

    auto addr = box.run("alice", "address");
    ASSERT_EQ(addr.exit, 0);
    EXPECT_EQ(addr.at("address").get<std::string>(), alice);

    std::string bob = box.run("bob", "keygen --seed 4").at("address");

    auto faucet = box.run("alice", "faucet 1000 --seed 5");
    ASSERT_EQ(faucet.exit, 0);
    EXPECT_TRUE(faucet.at("accepted").get<bool>());
    EXPECT_EQ(faucet.at("balance").get<uint64_t>(), 1000u);

    auto send = box.run("alice", "send " + bob + " 100 --seed 6");
    ASSERT_EQ(send.exit, 0);
    ASSERT_TRUE(send.at("accepted").get<bool>());
    std::string pay_hash = send.at("tx_hash");

    EXPECT_EQ(box.run("alice", "rescan").at("balance").get<uint64_t>(), 899u);
    EXPECT_EQ(box.run("bob", "rescan").at("balance").get<uint64_t>(), 100u);

    // a transparent output still lands in the recipient's wallet
    auto tsend = box.run("alice", "send " + bob + " 50 --transparent --seed 7");
    ASSERT_EQ(tsend.exit, 0);
    EXPECT_EQ(box.run("bob", "rescan").at("balance").get<uint64_t>(), 150u);
    EXPECT_EQ(box.run("alice", "rescan").at("balance").get<uint64_t>(), 848u);

    auto root = box.run("alice", "ledger root");
    ASSERT_EQ(root.exit, 0);
    EXPECT_EQ(root.at("height").get<uint64_t>(), 3u);
    EXPECT_EQ(root.at("gas").get<uint64_t>(), 1u);
    EXPECT_EQ(root.at("notes").get<uint64_t>(), 5u);
    EXPECT_EQ(root.at("root").get<std::string>().size(), 64u);

    auto lt = box.run("alice", "ledger tx " + pay_hash);
    ASSERT_EQ(lt.exit, 0);
    EXPECT_EQ(lt.at("height").get<uint64_t>(), 1u);  // heights are 0-based
    EXPECT_FALSE(lt.at("faucet").get<bool>());
    EXPECT_EQ(lt.at("nullifiers").size(), 1u);
    EXPECT_EQ(lt.at("mints").size(), 2u);
    EXPECT_EQ(lt.at("positions").size(), 2u);
    EXPECT_GT(lt.at("proof_bytes").get<uint64_t>(), 0u);

    auto nf = box.run("alice", "ledger nullifiers");
    ASSERT_EQ(nf.exit, 0);
    EXPECT_EQ(nf.at("spent").size(), 2u);
    EXPECT_EQ(nf.at("license").size(), 0u);

    auto broke = box.run("alice", "send " + bob + " 5000 --seed 8");
    EXPECT_EQ(broke.exit, 2);
    EXPECT_EQ(broke.error_kind(), "insufficient-funds");

    auto badaddr = box.run("alice", "send deadbeef 10 --seed 9");
    EXPECT_EQ(badaddr.exit, 2);
    EXPECT_EQ(badaddr.error_kind(), "bad-address");

    auto badhash = box.run("alice", "ledger tx nothex");
    EXPECT_EQ(badhash.exit, 2);
    EXPECT_EQ(badhash.error_kind(), "bad-hash");

    auto unknown = box.run("alice", "ledger tx " + std::string(64, '0'));
    EXPECT_EQ(unknown.exit, 2);
    EXPECT_EQ(unknown.error_kind(), "unknown-tx");
}

TEST(Cli, LicenseLifecycle) {
    CliBox box;
    Story st = Story::play(box);

    auto lics = box.run("alice", "licenses");
    ASSERT_EQ(lics.exit, 0);
    ASSERT_EQ(lics.at("licenses").size(), 1u);
    const json& lic = lics.at("licenses")[0];
    EXPECT_EQ(lic.at("id").get<uint64_t>(), st.license_pos);
    EXPECT_EQ(lic.at("attr").get<uint64_t>(), 777u);
    EXPECT_FALSE(lic.at("revoked").get<bool>());

    // the request JSON landed both on stdout and in the file
    json sr = json::parse(slurp(st.sr_file));
    EXPECT_EQ(sr.at("version").get<int>(), 1);

    auto grant = box.run("sp", "grant-service '" + st.sr_file.string() + "'");
    ASSERT_EQ(grant.exit, 0);
    EXPECT_TRUE(grant.at("granted").get<bool>());

    auto attr_ok = box.run("sp", "grant-service '" + st.sr_file.string() + "' --require-attr 777");
    EXPECT_EQ(attr_ok.exit, 0);
    EXPECT_TRUE(attr_ok.at("granted").get<bool>());

    auto attr_bad = box.run("sp", "grant-service '" + st.sr_file.string() + "' --require-attr 778");
    EXPECT_EQ(attr_bad.exit, 3);
    EXPECT_FALSE(attr_bad.at("granted").get<bool>());
    EXPECT_EQ(attr_bad.at("reason").get<std::string>(), "policy");

    // the same challenge is burned on-chain; a fresh one still works
    auto replay = box.run("alice", "use-license " + std::to_string(st.license_pos) +
                                       " --challenge 5 --sp " + st.sp + " --seed 110");
    EXPECT_EQ(replay.exit, 2);
    ASSERT_TRUE(replay.has_doc);
    EXPECT_FALSE(replay.at("accepted").get<bool>());
    EXPECT_EQ(replay.at("reject_reason").get<std::string>(), "license-nullifier-seen");

    auto fresh = box.run("alice", "use-license " + std::to_string(st.license_pos) +
                                      " --challenge 6 --sp " + st.sp + " --seed 111");
    EXPECT_EQ(fresh.exit, 0);
    ASSERT_TRUE(fresh.has_doc);
    EXPECT_TRUE(fresh.doc.contains("service_request"));

    auto nf = box.run("sp", "ledger nullifiers");
    EXPECT_EQ(nf.at("license").size(), 2u);

    auto nolic = box.run("alice", "use-license 999 --challenge 7 --sp " + st.sp + " --seed 112");
    EXPECT_EQ(nolic.exit, 2);
    EXPECT_EQ(nolic.error_kind(), "unknown-license");

    auto noreq = box.run("sp", "issue-license 999 5 --seed 113");
    EXPECT_EQ(noreq.exit, 2);
    EXPECT_EQ(noreq.error_kind(), "unknown-request");

    auto nofile = box.run("sp", "grant-service '" + (box.dir / "nope.json").string() + "'");
    EXPECT_EQ(nofile.exit, 4);
    EXPECT_EQ(nofile.error_kind(), "io");

    fs::path junk = box.dir / "junk.json";
    std::ofstream(junk) << "{ not json";
    auto badreq = box.run("sp", "grant-service '" + junk.string() + "'");
    EXPECT_EQ(badreq.exit, 2);
    EXPECT_EQ(badreq.error_kind(), "bad-request");
}

TEST(Cli, ExitCodes) {
    CliBox box;
    ASSERT_EQ(box.run("alice", "keygen --seed 21").exit, 0);

    auto usage = box.run("alice", "--bogus-flag address");
    EXPECT_EQ(usage.exit, 1);
    ASSERT_TRUE(usage.has_doc);
    EXPECT_EQ(usage.error_kind(), "usage");

    EXPECT_EQ(box.run("alice", "").exit, 1);
    EXPECT_EQ(box.run("alice", "frobnicate").exit, 1);
    EXPECT_EQ(box.run("alice", "faucet").exit, 1);
    EXPECT_EQ(box.run("alice", "--arity 99 keygen").exit, 1);
    EXPECT_EQ(box.run("alice", "--depth 0 keygen").exit, 1);

    // wallet file missing entirely
    auto nowallet = box.run("ghost", "address");
    EXPECT_EQ(nowallet.exit, 4);
    EXPECT_EQ(nowallet.error_kind(), "io");

    // wrong passphrase
    auto badpw = box.run("alice", "address", "not-the-passphrase");
    EXPECT_EQ(badpw.exit, 4);
    EXPECT_EQ(badpw.error_kind(), "passphrase");

    // ledger file missing for a read-only command
    auto noledger = box.run("alice", "ledger root");
    EXPECT_EQ(noledger.exit, 4);
    EXPECT_EQ(noledger.error_kind(), "io");

    // faucet value outside the note range
    ASSERT_EQ(box.run("alice", "faucet 1 --seed 22").exit, 0);
    auto huge = box.run("alice", "faucet 99999999999999999999");
    EXPECT_EQ(huge.exit, 1);
}

TEST(Cli, ConfigFile) {
    CliBox box;
    fs::path cfg = box.dir / "citadel.ini";
    fs::path wallet = box.dir / "cfg.wallet";
    {
        std::ofstream f(cfg);
        f << "ledger=" << (box.dir / "cfg-ledger.bin").string() << "\n";
        f << "wallet=" << wallet.string() << "\n";
        f << "passphrase=cfg-pw\n";
        f << "gas=2\n";
    }
    std::string base = "env CITADEL_CONFIG='" + cfg.string() + "' '" CITADEL_CLI_BIN "' ";

    auto kg = box.raw(base + "keygen --seed 31");
    ASSERT_EQ(kg.exit, 0);
    EXPECT_TRUE(fs::exists(wallet));
    std::string addr = kg.at("address");

    EXPECT_EQ(box.raw(base + "address").at("address").get<std::string>(), addr);

    // config gas applies when the ledger is created
    ASSERT_EQ(box.raw(base + "faucet 100 --seed 32").exit, 0);
    EXPECT_EQ(box.raw(base + "ledger root").at("gas").get<uint64_t>(), 2u);

    // flags win over config values
    fs::path other = box.dir / "other.wallet";
    auto flagged = box.raw(base + "keygen --wallet '" + other.string() + "' --seed 33");
    ASSERT_EQ(flagged.exit, 0);
    EXPECT_TRUE(fs::exists(other));

    fs::path badcfg = box.dir / "bad.ini";
    std::ofstream(badcfg) << "frobnicate=1\n";
    auto rejected = box.raw("env CITADEL_CONFIG='" + badcfg.string() + "' '" CITADEL_CLI_BIN
                            "' address");
    EXPECT_EQ(rejected.exit, 1);
}

TEST(Cli, SeededRunsAreReproducible) {
    auto script = [](CliBox& box) {
        std::string alice = box.run("alice", "keygen --seed 41").at("address");
        std::string bob = box.run("bob", "keygen --seed 42").at("address");
        EXPECT_EQ(box.run("alice", "faucet 500 --seed 43").exit, 0);
        auto send = box.run("alice", "send " + bob + " 77 --seed 44");
        EXPECT_EQ(send.exit, 0);
        return std::tuple{alice, bob, send.at("tx_hash").get<std::string>(),
                          box.run("alice", "ledger root").doc};
    };

    CliBox a, b;
    auto ra = script(a);
    auto rb = script(b);
    EXPECT_EQ(std::get<0>(ra), std::get<0>(rb));
    EXPECT_EQ(std::get<1>(ra), std::get<1>(rb));
    EXPECT_EQ(std::get<2>(ra), std::get<2>(rb));
    EXPECT_EQ(std::get<3>(ra), std::get<3>(rb));
    EXPECT_EQ(slurp(a.ledger), slurp(b.ledger));
    EXPECT_FALSE(slurp(a.ledger).empty());
}

TEST(Cli, ReadOnlyCommandsDontTouchTheLedger) {
    CliBox box;
    Story st = Story::play(box);

    std::string before = slurp(box.ledger);
    ASSERT_FALSE(before.empty());

    box.run("alice", "address");
    box.run("alice", "licenses");
    box.run("alice", "rescan");
    box.run("alice", "ledger root");
    box.run("alice", "ledger tx " + st.pay_hash);
    box.run("alice", "ledger nullifiers");
    box.run("sp", "grant-service '" + st.sr_file.string() + "'");

    EXPECT_EQ(slurp(box.ledger), before);
}

TEST(Cli, NoSecretsInOutputsOrLedger) {
    CliBox box;
    Story st = Story::play(box);
    box.run("alice", "licenses");
    box.run("sp", "grant-service '" + st.sr_file.string() + "'");
    box.run("alice", "rescan");
    box.run("alice", "ledger nullifiers");
    box.run("alice", "ledger tx " + st.pay_hash);

    // positive control: public values do show up, so substring search works
    ASSERT_NE(box.transcript.find(st.alice), std::string::npos);
    ASSERT_NE(box.transcript.find(st.pay_hash), std::string::npos);

    std::string ledger_bytes = slurp(box.ledger);
    std::string sr_bytes = slurp(st.sr_file);
    ASSERT_FALSE(ledger_bytes.empty());

    // witness_material: per-note keys live inside the stored proof blobs (the
    // transparent backend keeps whole witnesses), so only long-term keys get
    // the binary ledger sweep
    auto check_absent = [&](const Scalar& secret, const std::string& wallet_bytes,
                            const std::string& label, bool witness_material = false) {
        Bytes32 raw = secret.to_bytes();
        std::string hex = to_hex(raw);
        std::string bin(reinterpret_cast<const char*>(raw.data()), raw.size());
        EXPECT_EQ(box.transcript.find(hex), std::string::npos) << label << " hex in output";
        EXPECT_EQ(sr_bytes.find(hex), std::string::npos) << label << " hex in request file";
        EXPECT_EQ(ledger_bytes.find(hex), std::string::npos) << label << " hex in ledger";
        if (!witness_material) {
            EXPECT_EQ(ledger_bytes.find(bin), std::string::npos)
                << label << " bytes in ledger";
        }
        EXPECT_EQ(wallet_bytes.find(bin), std::string::npos)
            << label << " stored unencrypted in wallet file";
    };

    for (std::string who : {"alice", "bob", "sp"}) {
        std::string wallet_bytes = slurp(box.wallet(who));
        Wallet w = Wallet::load(box.wallet(who).string(), CliBox::pass(who));
        check_absent(w.keys.a, wallet_bytes, who + ".a");
        check_absent(w.keys.b, wallet_bytes, who + ".b");
        check_absent(w.lic_sk, wallet_bytes, who + ".lic_sk");
        for (const auto& n : w.notes) {
            check_absent(n.nsk.nsk, wallet_bytes, who + " note nsk", true);
        }
    }
}

}  // namespace
