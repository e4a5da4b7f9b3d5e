#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "citadel/backend.hpp"
#include "citadel/wallet.hpp"

using namespace citadel;

namespace {

struct Net {
    SeededRng rng;
    TransparentBackend backend;
    Ledger ledger{Scalar::from_u64(1), 4, 6};

    explicit Net(uint64_t seed) : rng(seed) {}

    void give(Wallet& w, uint64_t amount) {
        ASSERT_TRUE(ledger.faucet(w.keys.pk, Scalar::from_u64(amount), rng).accepted);
        w.sync(ledger);
    }

    Receipt submit(const Transaction& tx) { return ledger.submit(tx, backend, backend); }
};

std::string temp_path(const char* stem) {
    return (std::filesystem::temp_directory_path() /
            (std::string(stem) + "." + std::to_string(::getpid())))
        .string();
}

}  // namespace

TEST(Wallet, PaymentUpdatesBothSides) {
    Net net(601);
    Wallet alice = Wallet::create(net.rng);
    Wallet bob = Wallet::create(net.rng);
    net.give(alice, 1000);
    EXPECT_EQ(alice.balance(), Scalar::from_u64(1000));
    EXPECT_EQ(bob.balance(), Scalar::zero());

    Transaction tx = alice.pay(bob.keys.pk, Scalar::from_u64(100), true, net.ledger,
                               net.backend, net.rng);
    ASSERT_TRUE(net.submit(tx).accepted);
    alice.sync(net.ledger);
    bob.sync(net.ledger);

    EXPECT_EQ(alice.balance(), Scalar::from_u64(899));  // 1000 - 100 - 1 gas
    EXPECT_EQ(bob.balance(), Scalar::from_u64(100));
    ASSERT_EQ(alice.notes.size(), 2u);  // faucet note now spent, plus change
    EXPECT_TRUE(alice.notes[0].spent);
    EXPECT_FALSE(alice.notes[1].spent);

    // change is immediately spendable
    Transaction tx2 = alice.pay(bob.keys.pk, Scalar::from_u64(800), true, net.ledger,
                                net.backend, net.rng);
    ASSERT_TRUE(net.submit(tx2).accepted);
    alice.sync(net.ledger);
    bob.sync(net.ledger);
    EXPECT_EQ(alice.balance(), Scalar::from_u64(98));
    EXPECT_EQ(bob.balance(), Scalar::from_u64(900));

    // a third wallet sees none of this
    Wallet eve = Wallet::create(net.rng);
    eve.sync(net.ledger);
    EXPECT_TRUE(eve.notes.empty());
    EXPECT_EQ(eve.balance(), Scalar::zero());
}

TEST(Wallet, GreedySelectionAndFailureModes) {
    Net net(602);
    Wallet alice = Wallet::create(net.rng);
    Wallet bob = Wallet::create(net.rng);
    for (int i = 0; i < 4; i++) net.give(alice, 10);
    EXPECT_EQ(alice.balance(), Scalar::from_u64(40));

    // 25 + 1 gas needs three 10s
    auto funding = alice.fund(Scalar::from_u64(26), net.ledger);
    EXPECT_EQ(funding.spends.size(), 3u);
    EXPECT_EQ(funding.change, Scalar::from_u64(4));

    // spending everything leaves no change mint
    Transaction all = alice.pay(bob.keys.pk, Scalar::from_u64(39), true, net.ledger,
                                net.backend, net.rng);
    EXPECT_EQ(all.mints.size(), 1u);
    ASSERT_TRUE(net.submit(all).accepted);
    alice.sync(net.ledger);
    EXPECT_EQ(alice.balance(), Scalar::zero());

    try {
        alice.pay(bob.keys.pk, Scalar::from_u64(1), true, net.ledger, net.backend, net.rng);
        FAIL() << "expected insufficient-funds";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "insufficient-funds");
    }
    // amounts beyond 64 bits are refused before any selection happens
    EXPECT_THROW(alice.fund(Scalar::zero() - Scalar::one(), net.ledger), Error);
}

TEST(Wallet, SyncAndRescanConverge) {
    Net net(603);
    Wallet alice = Wallet::create(net.rng);
    Wallet bob = Wallet::create(net.rng);
    net.give(alice, 500);
    ASSERT_TRUE(net.submit(alice.pay(bob.keys.pk, Scalar::from_u64(60), true, net.ledger,
                                     net.backend, net.rng))
                    .accepted);
    alice.sync(net.ledger);
    net.give(bob, 25);
    ASSERT_TRUE(net.submit(bob.pay(alice.keys.pk, Scalar::from_u64(30), true, net.ledger,
                                   net.backend, net.rng))
                    .accepted);
    alice.sync(net.ledger);
    bob.sync(net.ledger);

    auto snapshot = [](const Wallet& w) {
        std::vector<std::tuple<uint64_t, bool>> s;
        for (const auto& on : w.notes) s.emplace_back(on.pos, on.spent);
        return std::make_tuple(w.balance(), s, w.scan_height);
    };
    auto alice_before = snapshot(alice);
    auto bob_before = snapshot(bob);

    alice.rescan(net.ledger);
    bob.rescan(net.ledger);
    EXPECT_EQ(snapshot(alice), alice_before);
    EXPECT_EQ(snapshot(bob), bob_before);

    // sync after rescan is a no-op
    alice.sync(net.ledger);
    EXPECT_EQ(snapshot(alice), alice_before);
}

TEST(Wallet, LicenseFlowThroughWalletCalls) {
    Net net(604);
    Wallet user = Wallet::create(net.rng);
    Wallet sp = Wallet::create(net.rng);
    net.give(user, 200);
    net.give(sp, 50);

    auto req = user.request_license(sp.keys.pk, Scalar::from_u64(80), net.ledger,
                                    net.backend, net.rng);
    Receipt r1 = net.submit(req.tx);
    ASSERT_TRUE(r1.accepted);
    user.sync(net.ledger);
    sp.sync(net.ledger);

    // the request landed in the SP inbox, and the payment in its balance
    ASSERT_EQ(sp.requests.size(), 1u);
    EXPECT_EQ(sp.balance(), Scalar::from_u64(130));
    EXPECT_EQ(sp.requests[0].first.npk_user, req.request.npk_user);

    Transaction issue = sp.issue_license_for(sp.requests[0].first, Scalar::from_u64(42),
                                             net.ledger, net.backend, net.rng);
    Receipt r2 = net.submit(issue);
    ASSERT_TRUE(r2.accepted);
    user.sync(net.ledger);
    ASSERT_EQ(user.licenses.size(), 1u);
    uint64_t license_pos = user.licenses[0].pos;
    EXPECT_EQ(user.licenses[0].payload.attr, Scalar::from_u64(42));
    EXPECT_NE(user.license_at(license_pos), nullptr);
    EXPECT_EQ(user.license_at(license_pos + 1000), nullptr);

    auto use = user.use_license_at(license_pos, sp.lic_pk, Scalar::from_u64(7),
                                   sp.keys.pk, net.ledger, net.backend, net.backend,
                                   net.rng);
    Receipt r3 = net.submit(use.tx);
    ASSERT_TRUE(r3.accepted);

    auto record = net.ledger.find_license_call(use.tx.tx_hash);
    ASSERT_TRUE(record.has_value());
    ServiceRequest sreq = request_service(use.tx.tx_hash, sp.lic_pk, Scalar::from_u64(42),
                                          Scalar::from_u64(7), use.sc);
    auto granted = grant_service(sp.sp_keys(), sreq, record,
                                 [](const Scalar& attr, const Scalar&) {
                                     return attr == Scalar::from_u64(42);
                                 });
    EXPECT_TRUE(granted.granted) << granted.reason;

    EXPECT_THROW(user.use_license_at(99999, sp.lic_pk, Scalar::from_u64(8), sp.keys.pk,
                                     net.ledger, net.backend, net.backend, net.rng),
                 Error);

    // rescan reconstructs licenses and the SP inbox identically
    auto lic_pos_before = user.licenses[0].pos;
    user.rescan(net.ledger);
    ASSERT_EQ(user.licenses.size(), 1u);
    EXPECT_EQ(user.licenses[0].pos, lic_pos_before);
    sp.rescan(net.ledger);
    EXPECT_EQ(sp.requests.size(), 1u);
}

TEST(Wallet, SaveLoadEncryptedRoundtrip) {
    Net net(605);
    Wallet alice = Wallet::create(net.rng);
    net.give(alice, 77);

    std::string path = temp_path("citadel-test-wallet");
    alice.save(path, "correct horse");

    Wallet back = Wallet::load(path, "correct horse");
    ByteWriter wa, wb;
    alice.serialize(wa);
    back.serialize(wb);
    EXPECT_EQ(wa.take(), wb.take());
    EXPECT_EQ(back.balance(), Scalar::from_u64(77));
    EXPECT_EQ(back.address().encode(), alice.address().encode());

    try {
        Wallet::load(path, "wrong horse");
        FAIL() << "expected passphrase error";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "passphrase");
    }

    // flipped ciphertext byte: authentication fails
    {
        auto size = std::filesystem::file_size(path);
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(static_cast<std::streamoff>(size) - 3);
        f.put('\x42');
    }
    EXPECT_THROW(Wallet::load(path, "correct horse"), Error);

    alice.save(path, "correct horse");
    {
        std::fstream f(path, std::ios::binary | std::ios::in | std::ios::out);
        f.seekp(0);
        f.write("XXXX", 4);
    }
    try {
        Wallet::load(path, "correct horse");
        FAIL() << "expected corrupt";
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), "corrupt");
    }

    alice.save(path, "correct horse");
    std::filesystem::resize_file(path, 10);
    EXPECT_THROW(Wallet::load(path, "correct horse"), Error);

    EXPECT_THROW(Wallet::load(temp_path("citadel-no-wallet"), "x"), Error);
    std::filesystem::remove(path);
}

TEST(Wallet, AddressCodec) {
    SeededRng rng(606);
    Wallet w = Wallet::create(rng);
    std::string encoded = w.address().encode();
    EXPECT_EQ(encoded.size(), 192u);

    auto back = Address::decode(encoded);
    ASSERT_TRUE(back.has_value());
    EXPECT_EQ(back->pk.a, w.keys.pk.a);
    EXPECT_EQ(back->pk.b, w.keys.pk.b);
    EXPECT_EQ(back->lic_pk, w.lic_pk);

    EXPECT_FALSE(Address::decode("").has_value());
    EXPECT_FALSE(Address::decode(encoded.substr(0, 190)).has_value());
    EXPECT_FALSE(Address::decode(encoded + "00").has_value());
    std::string bad_hex = encoded;
    bad_hex[3] = 'g';
    EXPECT_FALSE(Address::decode(bad_hex).has_value());

    // identity components are rejected outright
    Address with_identity{{GroupElement::identity(), w.keys.pk.b}, w.lic_pk};
    EXPECT_FALSE(Address::decode(with_identity.encode()).has_value());

    // non-canonical point encoding
    std::string corrupted = encoded;
    corrupted[0] = 'f';
    corrupted[1] = 'f';  // y coordinate >= field modulus in the first point
    // either decode fails or the point is different; never the same address
    auto maybe = Address::decode(corrupted);
    if (maybe) {
        EXPECT_NE(maybe->pk.a, w.keys.pk.a);
    }
}

TEST(Wallet, ScanHeightAdvancesWithLedger) {
    Net net(607);
    Wallet alice = Wallet::create(net.rng);
    EXPECT_EQ(alice.scan_height, 0u);
    net.give(alice, 10);
    EXPECT_EQ(alice.scan_height, 1u);
    net.give(alice, 10);
    net.give(alice, 10);
    EXPECT_EQ(alice.scan_height, 3u);
    EXPECT_EQ(alice.notes.size(), 3u);

    // syncing against an unchanged ledger adds nothing
    alice.sync(net.ledger);
    EXPECT_EQ(alice.notes.size(), 3u);
    EXPECT_EQ(alice.scan_height, 3u);
}
