#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "atomscan/amm_sim.hpp"
#include "atomscan/matchmaker.hpp"

using namespace atomscan;

namespace {

PoolState pool(Amount r0, Amount r1, int fee = 0) {
    PoolState p;
    p.reserve0 = p.balance0 = r0;
    p.reserve1 = p.balance1 = r1;
    p.fee_bps = fee;
    return p;
}

using TxSet = std::set<std::pair<std::string, std::set<std::string>>>;

// Violations found by the detector versus violations the simulator injected,
// both keyed by (kind, transactions).
std::pair<TxSet, TxSet> detected_and_expected(const SimulationResult& sim) {
    TxSet det, exp;
    for (auto& [p, c] : extract_all(sim.trace, sim.registry)) {
        auto rep = run_matchmaker(c.deposits, c.withdrawals, MatchParams{});
        for (const auto& v : rep.violations) {
            std::set<std::string> t;
            for (const auto& d : v.deposits) t.insert(d.txid);
            for (const auto& w : v.withdrawals) t.insert(w.txid);
            det.insert({to_string(v.kind), t});
        }
    }
    for (const auto& l : sim.labels) {
        if (!l.kind) continue;
        std::set<std::string> t;
        if (*l.kind == ViolationKind::III_AccountMismatch) t = {l.txid_deposit, l.txid_withdrawal};
        else t = {l.txid.empty() ? l.txid_deposit : l.txid};
        exp.insert({to_string(*l.kind), t});
    }
    return {det, exp};
}

Scenario fair_only(std::uint64_t seed) {
    Scenario s;
    s.seed = seed;
    s.horizon_blocks = 10;
    PoolConfig p;
    p.pool = sim_address(1, 1);
    p.token0 = sim_address(2, 0);
    p.token1 = sim_address(2, 1);
    s.pools.push_back(p);
    AgentConfig a;
    a.account = sim_address(3, 1);
    a.pools = {0};
    a.activity = Rational(1);
    s.agents.push_back(a);
    return s;
}

}  // namespace

TEST(PoolMath, QuoteValues) {
    EXPECT_EQ(quote_out(pool(1000, 1000), 100, Direction::ZeroForOne), 90u);
    EXPECT_EQ(quote_out(pool(1000, 1000), 1000, Direction::ZeroForOne), 500u);
    EXPECT_EQ(quote_out(pool(1000, 4000), 1000, Direction::OneForZero), 200u);
    // 30 bps: 997 effective units in.
    EXPECT_EQ(quote_out(pool(1000, 1000, 30), 1000, Direction::ZeroForOne), 499u);
    EXPECT_THROW(quote_out(pool(0, 1000), 10, Direction::ZeroForOne), EmptyPool);
}

TEST(PoolMath, SwapMovesReservesAndBalancesTogether) {
    PoolState p = pool(1000, 1000);
    EXPECT_THROW(fair_swap(p, 0, Direction::ZeroForOne), std::invalid_argument);
    Amount dy = fair_swap(p, 100, Direction::ZeroForOne);
    EXPECT_EQ(dy, 90u);
    EXPECT_EQ(p.reserve0, 1100u);
    EXPECT_EQ(p.reserve1, 910u);
    EXPECT_EQ(p.balance0, p.reserve0);
    EXPECT_EQ(p.balance1, p.reserve1);
}

TEST(PoolMath, ZeroFeeProductNeverDecreasesAndDriftIsBounded) {
    std::mt19937_64 g(42);
    PoolState p = pool(1'000'000'000'000, 1'000'000'000'000);
    for (int i = 0; i < 20000; ++i) {
        u128 k0 = static_cast<u128>(p.reserve0) * p.reserve1;
        Direction dir = g() % 2 ? Direction::ZeroForOne : Direction::OneForZero;
        Amount dx = 1 + g() % 1'000'000'000;
        Amount t0 = p.balance0, t1 = p.balance1;
        Amount dy = fair_swap(p, dx, dir);
        u128 k1 = static_cast<u128>(p.reserve0) * p.reserve1;
        ASSERT_TRUE(k1 >= k0) << "swap " << i;
        // (k1 - k0) / k1 <= 1 / min(reserve) on the post-swap pool.
        Amount mn = std::min(p.reserve0, p.reserve1);
        ASSERT_TRUE((k1 - k0) * mn <= k1) << "swap " << i;
        // Units leaving the trader enter the pool and vice versa.
        if (dir == Direction::ZeroForOne) {
            ASSERT_EQ(p.balance0 - t0, dx);
            ASSERT_EQ(t1 - p.balance1, dy);
        } else {
            ASSERT_EQ(p.balance1 - t1, dx);
            ASSERT_EQ(t0 - p.balance0, dy);
        }
    }
}

TEST(PoolMath, BalanceOnlyUpdatesSetExtractable) {
    PoolState p = pool(1000, 1000);
    apply_rebase(p, 0, Rational(11, 10));
    EXPECT_EQ(p.balance0, 1100u);
    EXPECT_EQ(p.reserve0, 1000u);
    EXPECT_EQ(p.extractable(0), 100u);
    apply_rebase(p, 0, Rational(1));
    EXPECT_EQ(p.extractable(0), 100u);
    EXPECT_THROW(apply_rebase(p, 0, Rational(0)), std::invalid_argument);
    apply_airdrop(p, 1, 50);
    EXPECT_EQ(p.extractable(1), 50u);
    EXPECT_EQ(accrue_interest(p, 1, Rational(1, 100), 3), 31u);  // floor(1050 * 3 / 100)
    EXPECT_EQ(p.extractable(1), 81u);
    EXPECT_EQ(p.reserve1, 1000u);
}

TEST(Scenario, JsonRoundTrip) {
    Scenario s = mixed_scenario(3, 200);
    Json j = s.to_json();
    Scenario back = Scenario::from_json(j);
    EXPECT_EQ(back.to_json().dump(), j.dump());
    EXPECT_THROW(Scenario::from_json(Json::parse(R"({"pools": 3})")), InvalidScenario);
}

TEST(Scenario, ValidationRejectsBadConfigs) {
    Scenario s = fair_only(1);
    EXPECT_NO_THROW(validate(s));
    Scenario a = s;
    a.pools[0].token1 = a.pools[0].token0;
    EXPECT_THROW(validate(a), InvalidScenario);
    Scenario b = s;
    b.agents[0].pools = {4};
    EXPECT_THROW(validate(b), InvalidScenario);
    Scenario c = s;
    c.horizon_blocks = 0;
    EXPECT_THROW(validate(c), InvalidScenario);
    Scenario d = s;
    d.pools[0].reserve0 = 0;
    EXPECT_THROW(validate(d), InvalidScenario);
    EXPECT_THROW(simulate(d), InvalidScenario);
    EXPECT_THROW(parse_agent_kind("Whale"), InvalidScenario);
}

TEST(Simulate, FairTrafficIsAllAtomic) {
    auto sim = simulate(fair_only(5));
    ASSERT_FALSE(sim.labels.empty());
    for (const auto& l : sim.labels)
        EXPECT_TRUE(l.category == LabelCategory::AtomicSwap || l.category == LabelCategory::AtomicAddLiquidity);
    for (auto& [p, c] : extract_all(sim.trace, sim.registry))
        EXPECT_TRUE(run_matchmaker(c.deposits, c.withdrawals, MatchParams{}).violations.empty());
}

TEST(Simulate, TraceIsStreamOrderedAndParseable) {
    auto sim = simulate(mixed_scenario(2, 300));
    for (std::size_t i = 1; i < sim.trace.size(); ++i) ASSERT_TRUE(stream_order(sim.trace[i - 1], sim.trace[i]) <= 0);
    std::stringstream buf;
    write_trace(buf, sim.trace);
    auto back = parse_trace(buf);
    EXPECT_EQ(back.size(), sim.trace.size());
}

TEST(Simulate, DeterministicForFixedSeed) {
    auto a = simulate(mixed_scenario(9, 300)), b = simulate(mixed_scenario(9, 300));
    std::stringstream sa, sb;
    write_trace(sa, a.trace);
    write_trace(sb, b.trace);
    EXPECT_EQ(sa.str(), sb.str());
    EXPECT_EQ(a.labels, b.labels);
    auto c = simulate(mixed_scenario(10, 300));
    std::stringstream sc;
    write_trace(sc, c.trace);
    EXPECT_NE(sa.str(), sc.str());
}

TEST(Simulate, EveryInjectedViolationIsLabeled) {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        auto sim = simulate(mixed_scenario(seed, 500));
        auto [det, exp] = detected_and_expected(sim);
        EXPECT_FALSE(exp.empty());
        EXPECT_EQ(det, exp) << "seed " << seed;
    }
}

TEST(Simulate, ExtractableNeverNegative) {
    auto sim = simulate(mixed_scenario(4, 500));
    for (const auto& p : sim.final_pools) {
        EXPECT_GE(p.balance0, p.reserve0);
        EXPECT_GE(p.balance1, p.reserve1);
    }
}

TEST(Simulate, LabelJsonRoundTrip) {
    auto sim = simulate(mixed_scenario(6, 300));
    for (const auto& l : sim.labels) EXPECT_EQ(label_from_json(to_json(l)), l);
}
