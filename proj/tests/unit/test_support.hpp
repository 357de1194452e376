#pragma once

#include <cstdio>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "atomscan/trace_model.hpp"

namespace testutil {

inline std::string fixture(const std::string& rel) { return std::string(ATOMSCAN_FIXTURE_DIR) + "/" + rel; }

inline std::string txid(unsigned long long n) {
    char buf[67];
    std::snprintf(buf, sizeof buf, "0x%064llx", n);
    return buf;
}

inline atomscan::AccountId addr(unsigned long long n) {
    char buf[43];
    std::snprintf(buf, sizeof buf, "0x%040llx", n);
    return atomscan::AccountId(buf);
}

// Fixture addresses.
inline const atomscan::AccountId kPool = addr(0xc1);
inline const atomscan::AccountId kT0 = addr(0xa0);
inline const atomscan::AccountId kT1 = addr(0xa1);

inline atomscan::DepositRecord dep(const atomscan::AccountId& who, atomscan::Amount v, const std::string& tx,
                                   std::uint64_t block, std::uint32_t idx = 0, const char* seq = "0",
                                   atomscan::DepositOrigin o = atomscan::DepositOrigin::Transfer) {
    atomscan::DepositRecord d;
    d.depositor = who;
    d.pool = kPool;
    d.token = kT0;
    d.value = v;
    d.txid = tx;
    d.block = block;
    d.tx_index = idx;
    d.call_seq = atomscan::CallSeq::parse(seq);
    d.origin_func = o;
    return d;
}

inline atomscan::WithdrawalRecord wd(const atomscan::AccountId& who, atomscan::Amount in, atomscan::Amount out,
                                     const std::string& tx, std::uint64_t block, std::uint32_t idx = 0,
                                     const char* seq = "0") {
    atomscan::WithdrawalRecord w;
    w.withdrawer = who;
    w.pool = kPool;
    w.token_in = kT0;
    w.token_out = kT1;
    w.expected_value_in = in;
    w.value_out = out;
    w.txid = tx;
    w.block = block;
    w.tx_index = idx;
    w.call_seq = atomscan::CallSeq::parse(seq);
    w.origin_func = atomscan::WithdrawalOrigin::Swap;
    return w;
}

struct Stream {
    std::vector<atomscan::DepositRecord> deposits;
    std::vector<atomscan::WithdrawalRecord> withdrawals;
    std::size_t size() const { return deposits.size() + withdrawals.size(); }
};

// Random pool activity in stream order: intra-tx swaps (some off by up to
// 15%), two-deposit mints, cross-tx deposit/withdrawal pairs by the same or a
// different account, and lone records. Stops once `records` is reached.
inline Stream random_stream(std::uint64_t seed, std::size_t records, int accounts = 8) {
    std::mt19937_64 rng(seed);
    auto uni = [&](std::uint64_t lo, std::uint64_t hi) { return lo + rng() % (hi - lo + 1); };
    auto jitter = [&](atomscan::Amount v) {
        if (uni(0, 3) != 0) return v;
        std::uint64_t pct = uni(0, 15);
        return uni(0, 1) ? v + v * pct / 100 : v - v * pct / 100;
    };
    Stream s;
    std::uint64_t block = 1, tx = 1;
    std::uint32_t idx = 0;
    auto next_tx = [&]() {
        ++tx;
        if (uni(0, 2) == 0) {
            ++idx;
        } else {
            block += uni(1, 3);
            idx = 0;
        }
    };
    while (s.size() < records) {
        atomscan::AccountId who = addr(0x1000 + uni(0, accounts - 1));
        atomscan::Amount v = uni(1000, 100000);
        std::string t = txid(tx);
        switch (uni(0, 19)) {
            case 0: case 1: case 2: case 3: case 4: case 5: case 6: case 7: case 8: case 9:
                s.deposits.push_back(dep(who, v, t, block, idx, "0.0", atomscan::DepositOrigin::TransferFrom));
                s.withdrawals.push_back(wd(who, jitter(v), v / 2, t, block, idx, "0.1"));
                break;
            case 10: case 11: {
                atomscan::Amount v2 = uni(1000, 100000);
                s.deposits.push_back(dep(who, v, t, block, idx, "0.0", atomscan::DepositOrigin::TransferFrom));
                s.deposits.push_back(dep(who, v2, t, block, idx, "0.1", atomscan::DepositOrigin::TransferFrom));
                auto w = wd(who, v + v2, v, t, block, idx, "0.2");
                w.origin_func = atomscan::WithdrawalOrigin::Mint;
                s.withdrawals.push_back(w);
                break;
            }
            case 12: case 13: case 14: {
                s.deposits.push_back(dep(who, v, t, block, idx));
                next_tx();
                atomscan::AccountId other = uni(0, 3) == 0 ? addr(0x1000 + uni(0, accounts - 1)) : who;
                s.withdrawals.push_back(wd(other, jitter(v), v / 2, txid(tx), block, idx));
                break;
            }
            case 15: case 16:
                s.deposits.push_back(dep(who, v, t, block, idx));
                break;
            default:
                s.withdrawals.push_back(wd(who, v, v / 2, t, block, idx));
                break;
        }
        next_tx();
    }
    return s;
}

// A window of at most `max_side` records per side cut at a transaction
// boundary from a fresh random stream.
inline Stream random_window(std::uint64_t seed, std::size_t max_side = 5) {
    Stream s = random_stream(seed, 2 * max_side + 4, 4);
    Stream out;
    std::set<std::string> txs;
    std::size_t i = 0, j = 0;
    while (i < s.deposits.size() || j < s.withdrawals.size()) {
        bool dep_first = j == s.withdrawals.size() || (i < s.deposits.size() && s.deposits[i].key() < s.withdrawals[j].key());
        std::string tx = dep_first ? s.deposits[i].txid : s.withdrawals[j].txid;
        std::size_t nd = 0, nw = 0;
        for (std::size_t k = i; k < s.deposits.size() && s.deposits[k].txid == tx; ++k) ++nd;
        for (std::size_t k = j; k < s.withdrawals.size() && s.withdrawals[k].txid == tx; ++k) ++nw;
        if (out.deposits.size() + nd > max_side || out.withdrawals.size() + nw > max_side) break;
        for (std::size_t k = 0; k < nd; ++k) out.deposits.push_back(s.deposits[i++]);
        for (std::size_t k = 0; k < nw; ++k) out.withdrawals.push_back(s.withdrawals[j++]);
    }
    return out;
}

}  // namespace testutil
