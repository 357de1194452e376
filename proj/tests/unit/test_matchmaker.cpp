#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <set>

#include "atomscan/amm_sim.hpp"
#include "atomscan/ingest.hpp"
#include "atomscan/matchmaker.hpp"
#include "test_support.hpp"

using namespace atomscan;
using testutil::addr;
using testutil::dep;
using testutil::txid;
using testutil::wd;

namespace {

using RecordId = std::pair<std::string, std::string>;  // txid, call_seq

std::multiset<RecordId> ids(const DetectionReport& r, bool violations_only) {
    std::multiset<RecordId> out;
    auto add = [&](const auto& recs) {
        for (const auto& x : recs) out.insert({x.txid, x.call_seq.to_string() + (std::is_same_v<std::decay_t<decltype(x)>, DepositRecord> ? "d" : "w")});
    };
    for (const auto& v : r.violations) {
        add(v.deposits);
        add(v.withdrawals);
    }
    if (!violations_only)
        for (const auto& m : r.matches) {
            add(m.deposits);
            add(m.withdrawals);
        }
    return out;
}

DetectionReport fixture_report(const std::string& dir) {
    auto recs = parse_trace_file(testutil::fixture(dir + "/trace.jsonl"));
    auto reg = PoolRegistry::load(testutil::fixture(dir + "/registry.json"));
    auto c = extract_candidates(recs, reg, testutil::kPool);
    return run_matchmaker(c.deposits, c.withdrawals, MatchParams{});
}

}  // namespace

TEST(Tolerance, PredicateUsesLargerSide) {
    EXPECT_TRUE(within_tolerance(100, 90, Rational(10)));
    EXPECT_TRUE(within_tolerance(90, 100, Rational(10)));
    EXPECT_FALSE(within_tolerance(100, 89, Rational(10)));
    EXPECT_TRUE(within_tolerance(0, 0, Rational(0)));
    EXPECT_FALSE(within_tolerance(0, 1, Rational(10)));
    EXPECT_TRUE(within_tolerance(5, 5, Rational(0)));
    EXPECT_FALSE(within_tolerance(5, 6, Rational(0)));
}

TEST(MatchParams, ValidatesRanges) {
    MatchParams p;
    EXPECT_NO_THROW(p.validate());
    p.tolerance_pct = Rational(100);
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p.tolerance_pct = Rational(-1);
    EXPECT_THROW(p.validate(), std::invalid_argument);
    p = MatchParams{};
    p.max_group = 0;
    EXPECT_THROW(p.validate(), std::invalid_argument);
}

TEST(Matchmaker, JoinFixture) {
    DetectionReport r = fixture_report("join_problem");
    ASSERT_EQ(r.matches.size(), 2u);
    EXPECT_EQ(r.matches[0].deposits.size(), 1u);
    EXPECT_EQ(r.matches[0].deposits[0].txid, txid(2));
    EXPECT_EQ(r.matches[0].withdrawals[0].txid, txid(2));
    EXPECT_TRUE(r.matches[0].intra_tx);
    EXPECT_EQ(r.matches[0].kind, MatchKind::AtomicSwap);
    EXPECT_EQ(r.matches[0].exchange_rate, Rational(100, 95));
    ASSERT_EQ(r.matches[1].deposits.size(), 2u);
    EXPECT_EQ(r.matches[1].deposits[0].txid, txid(3));
    EXPECT_EQ(r.matches[1].deposits[1].txid, txid(4));
    EXPECT_EQ(r.matches[1].withdrawals[0].txid, txid(5));
    EXPECT_EQ(r.matches[1].kind, MatchKind::AtomicAddLiquidity);
    EXPECT_FALSE(r.matches[1].intra_tx);

    ASSERT_EQ(r.violations.size(), 3u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::II_StandaloneDeposit);
    EXPECT_EQ(r.violations[0].deposits[0].txid, txid(1));
    EXPECT_EQ(r.violations[0].anomaly, AnomalyClass::U_Underwater);
    EXPECT_EQ(r.violations[1].kind, ViolationKind::I_StandaloneWithdrawal);
    EXPECT_EQ(r.violations[1].withdrawals[0].txid, txid(6));
    EXPECT_EQ(r.violations[2].kind, ViolationKind::IV_LowerValueDeposit);
    EXPECT_EQ(r.violations[2].deposits[0].txid, txid(7));
    EXPECT_EQ(r.violations[2].withdrawals[0].txid, txid(8));
    EXPECT_EQ(r.violations[2].value_gap, -50);
    EXPECT_EQ(r.violations[2].block_gap, 1u);
    EXPECT_EQ(validate_report(r, MatchParams{}), std::nullopt);
}

TEST(Matchmaker, JoinFixtureWithoutReversePassLeavesMintUnmatched) {
    auto recs = parse_trace_file(testutil::fixture("join_problem/trace.jsonl"));
    auto reg = PoolRegistry::load(testutil::fixture("join_problem/registry.json"));
    auto c = extract_candidates(recs, reg, testutil::kPool);
    MatchParams p;
    p.use_reverse_pass = false;
    auto r = run_matchmaker(c.deposits, c.withdrawals, p);
    EXPECT_EQ(r.matches.size(), 1u);
}

TEST(Matchmaker, InterleaveFixture) {
    DetectionReport r = fixture_report("interleave");
    std::size_t flagged_21 = 0, flagged_22 = 0;
    for (const auto& v : r.violations) {
        if (v.kind != ViolationKind::Interleaved) continue;
        for (const auto& w : v.withdrawals) {
            flagged_21 += w.txid == txid(0x15);
            flagged_22 += w.txid == txid(0x16);
        }
    }
    EXPECT_GT(flagged_21, 0u);
    EXPECT_EQ(flagged_22, 0u);
}

TEST(Interleaving, StackAutomaton) {
    MatchParams p;
    // in10 in7 out7 out10: the outer deposit is overtaken by the inner pair.
    auto nested = check_interleaving({{true, 10, 0}, {true, 7, 1}, {false, 7, 0}, {false, 10, 1}}, p);
    ASSERT_EQ(nested.flags.size(), 1u);
    EXPECT_EQ(nested.flags[0].deposits, std::vector<std::uint32_t>{0});
    EXPECT_EQ(nested.flags[0].withdrawal, 1u);
    auto seq = check_interleaving({{true, 10, 0}, {false, 10, 0}, {true, 7, 1}, {false, 7, 1}}, p);
    EXPECT_TRUE(seq.flags.empty());
    EXPECT_TRUE(seq.underflow.empty());
    auto under = check_interleaving({{false, 10, 0}}, p);
    EXPECT_EQ(under.underflow, std::vector<std::uint32_t>{0});
    // Two deposits paid by one withdrawal is an ordinary group.
    auto pair = check_interleaving({{true, 5, 0}, {true, 5, 1}, {false, 10, 0}}, p);
    EXPECT_TRUE(pair.flags.empty());
}

TEST(Matchmaker, ClassifiesLoneAndMismatchedRecords) {
    auto A = addr(0xa), B = addr(0xb);
    std::vector<DepositRecord> D{dep(A, 1000, txid(1), 1), dep(A, 1000, txid(3), 3)};
    std::vector<WithdrawalRecord> W{wd(B, 1000, 900, txid(2), 2), wd(A, 2000, 900, txid(4), 4)};
    auto r = run_matchmaker(D, W, MatchParams{});
    ASSERT_EQ(r.violations.size(), 2u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::III_AccountMismatch);
    EXPECT_FALSE(r.violations[0].anomaly);
    EXPECT_EQ(r.violations[1].kind, ViolationKind::IV_LowerValueDeposit);
    EXPECT_TRUE(r.matches.empty());
}

TEST(Matchmaker, OverpaymentIsKindV) {
    auto A = addr(0xa);
    std::vector<DepositRecord> D{dep(A, 2000, txid(1), 1)};
    std::vector<WithdrawalRecord> W{wd(A, 1000, 900, txid(2), 2)};
    auto r = run_matchmaker(D, W, MatchParams{});
    ASSERT_EQ(r.violations.size(), 1u);
    EXPECT_EQ(r.violations[0].kind, ViolationKind::V_HigherValueDeposit);
    EXPECT_EQ(r.violations[0].value_gap, 1000);
}

TEST(Matchmaker, TimeoutSplitsCrossTxPair) {
    auto A = addr(0xa);
    std::vector<DepositRecord> D{dep(A, 1000, txid(1), 1)};
    std::vector<WithdrawalRecord> W{wd(A, 1000, 900, txid(2), 100)};
    MatchParams p;
    p.timeout_blocks = 50;
    auto r = run_matchmaker(D, W, p);
    EXPECT_TRUE(r.matches.empty());
    EXPECT_EQ(r.violations.size(), 2u);
    p.timeout_blocks = 200;
    EXPECT_EQ(run_matchmaker(D, W, p).matches.size(), 1u);
}

TEST(Matchmaker, RejectsUnorderedInput) {
    auto A = addr(0xa);
    std::vector<DepositRecord> D{dep(A, 1, txid(2), 2), dep(A, 1, txid(1), 1)};
    EXPECT_THROW(run_matchmaker(D, {}, MatchParams{}), std::invalid_argument);
}

TEST(MatchmakerProperty, PartitionSoundnessTemporal) {
    for (std::uint64_t seed = 1; seed <= 40; ++seed) {
        auto s = testutil::random_stream(seed, 400);
        MatchParams p;
        auto r = run_matchmaker(s.deposits, s.withdrawals, p);
        EXPECT_EQ(validate_report(r, p), std::nullopt) << "seed " << seed;
        // Every input record appears exactly once.
        std::multiset<RecordId> input;
        for (const auto& d : s.deposits) input.insert({d.txid, d.call_seq.to_string() + "d"});
        for (const auto& w : s.withdrawals) input.insert({w.txid, w.call_seq.to_string() + "w"});
        EXPECT_EQ(ids(r, false), input) << "seed " << seed;
        // Cross-tx withdrawals fall after their deposits and before the next
        // deposit left over from intra-transaction matching.
        std::set<StreamKey> intra_matched;
        for (const auto& m : r.matches) {
            if (!m.intra_tx) continue;
            for (const auto& d : m.deposits) intra_matched.insert(d.key());
            for (const auto& w : m.withdrawals) intra_matched.insert(w.key());
        }
        // Leftovers of a transaction holding both sides act as one unit; the
        // unit only bounds a window when its net value is a deposit.
        std::map<std::string, i128> tx_net;
        std::set<std::string> tx_has_w;
        for (const auto& d : s.deposits)
            if (!intra_matched.count(d.key())) tx_net[d.txid] += d.value;
        for (const auto& w : s.withdrawals)
            if (!intra_matched.count(w.key())) {
                tx_net[w.txid] -= w.expected_value_in;
                tx_has_w.insert(w.txid);
            }
        auto bounds_window = [&](const DepositRecord& d) {
            return !intra_matched.count(d.key()) && (!tx_has_w.count(d.txid) || tx_net[d.txid] > 0);
        };
        for (const auto& m : r.matches) {
            if (m.intra_tx) continue;
            StreamKey last_d = m.deposits.front().key();
            for (const auto& d : m.deposits) last_d = std::max(last_d, d.key());
            for (const auto& w : m.withdrawals) {
                // Withdrawals sharing a transaction with a group deposit belong
                // to a merged leftover unit.
                if (std::any_of(m.deposits.begin(), m.deposits.end(),
                                [&](const DepositRecord& d) { return d.txid == w.txid; }))
                    continue;
                EXPECT_LT(last_d, w.key()) << "seed " << seed;
                for (const auto& d : s.deposits)
                    if (last_d < d.key() && d.key() < w.key() && d.txid != w.txid && bounds_window(d))
                        ADD_FAILURE() << "deposit between matched pair, seed " << seed << " tx " << d.txid;
            }
        }
        for (const auto& v : r.violations) {
            if (v.kind == ViolationKind::I_StandaloneWithdrawal) EXPECT_TRUE(v.deposits.empty());
            if (v.kind == ViolationKind::II_StandaloneDeposit) EXPECT_TRUE(v.withdrawals.empty());
        }
    }
}

TEST(MatchmakerProperty, ToleranceMonotonicity) {
    const int tols[] = {0, 2, 5, 10, 15, 20, 40};
    for (std::uint64_t seed = 100; seed < 130; ++seed) {
        auto s = testutil::random_stream(seed, 300);
        std::multiset<RecordId> prev;
        bool first = true;
        for (int t : tols) {
            MatchParams p;
            p.tolerance_pct = Rational(t);
            auto cur = ids(run_matchmaker(s.deposits, s.withdrawals, p), true);
            if (!first) {
                for (const auto& id : cur)
                    EXPECT_TRUE(prev.count(id)) << "seed " << seed << " tol " << t << " new violation " << id.first;
            }
            prev = std::move(cur);
            first = false;
        }
    }
}

TEST(MatchmakerProperty, DeterministicJson) {
    auto s = testutil::random_stream(77, 2000);
    auto a = to_json(run_matchmaker(s.deposits, s.withdrawals, MatchParams{})).dump();
    auto b = to_json(run_matchmaker(s.deposits, s.withdrawals, MatchParams{})).dump();
    EXPECT_EQ(a, b);
}

TEST(MatchmakerProperty, FairSimulatorTrafficHasNoAnomalies) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        Scenario sc;
        sc.seed = seed;
        sc.horizon_blocks = 800;
        for (int i = 0; i < 2; ++i) {
            PoolConfig pc;
            pc.pool = sim_address(1, i);
            pc.token0 = sim_address(2, 2 * i);
            pc.token1 = sim_address(2, 2 * i + 1);
            sc.pools.push_back(pc);
        }
        for (int a = 0; a < 4; ++a) {
            AgentConfig ag;
            ag.kind = AgentKind::FairTrader;
            ag.account = sim_address(3, a);
            ag.pools = {0, 1};
            ag.add_liquidity_share = Rational(1, 4);
            sc.agents.push_back(ag);
        }
        auto sim = simulate(sc);
        EXPECT_TRUE(sim.labels.empty() || std::all_of(sim.labels.begin(), sim.labels.end(), [](const auto& l) {
                        return !l.kind.has_value();
                    }));
        for (const auto& [pool, c] : extract_all(sim.trace, sim.registry)) {
            auto r = run_matchmaker(c.deposits, c.withdrawals, MatchParams{});
            EXPECT_TRUE(r.violations.empty()) << "seed " << seed << " pool " << pool.str();
            EXPECT_FALSE(r.matches.empty());
        }
    }
}

TEST(MatchmakerRounds, Round1ResidualsFeedLaterRounds) {
    auto A = addr(0xa);
    std::vector<DepositRecord> D{dep(A, 1000, txid(1), 1, 0, "0.0"), dep(A, 500, txid(2), 2)};
    std::vector<WithdrawalRecord> W{wd(A, 1000, 900, txid(1), 1, 0, "0.1"), wd(A, 500, 450, txid(3), 3)};
    MatchParams p;
    auto r1 = round1_intra_tx(D, W, p);
    EXPECT_EQ(r1.matches.size(), 1u);
    EXPECT_EQ(r1.residuals.deposits.size(), 1u);
    EXPECT_EQ(r1.residuals.withdrawals.size(), 1u);
    auto r2 = round2_cross_tx(D, W, r1.residuals, p);
    EXPECT_EQ(r2.matches.size(), 1u);
    EXPECT_TRUE(r2.residuals.deposits.empty());
    EXPECT_TRUE(round3_classify(D, W, r2.residuals, p).empty());
}
