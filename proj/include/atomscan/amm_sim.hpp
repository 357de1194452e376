#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "atomscan/ingest.hpp"
#include "atomscan/rational.hpp"
#include "atomscan/trace_model.hpp"

namespace atomscan {

// ---------------------------------------------------------------------------
// Constant-product pool

class EmptyPool : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class Direction { ZeroForOne, OneForZero };

struct PoolState {
    Amount reserve0 = 0;
    Amount reserve1 = 0;
    Amount balance0 = 0;
    Amount balance1 = 0;
    int fee_bps = 0;

    Amount& reserve(int side) { return side == 0 ? reserve0 : reserve1; }
    Amount& balance(int side) { return side == 0 ? balance0 : balance1; }
    Amount reserve(int side) const { return side == 0 ? reserve0 : reserve1; }
    Amount balance(int side) const { return side == 0 ? balance0 : balance1; }
    Amount extractable(int side) const { return balance(side) - reserve(side); }
};

// Output for dx without touching the pool:
// floor(reserve_out - k / (reserve_in + dx_after_fee)).
Amount quote_out(const PoolState& pool, Amount dx, Direction dir);

// Trader pays dx in, receives dy out; reserves and balances move together.
// Throws EmptyPool when either reserve is zero, std::invalid_argument on dx == 0.
Amount fair_swap(PoolState& pool, Amount dx, Direction dir);

// Balance-only updates; reserves are untouched.
void apply_rebase(PoolState& pool, int side, const Rational& factor);
// Simple interest for `blocks` blocks at `rate_per_block`; returns the increment.
Amount accrue_interest(PoolState& pool, int side, const Rational& rate_per_block, std::uint64_t blocks);
void apply_airdrop(PoolState& pool, int side, Amount amount);

// ---------------------------------------------------------------------------
// Scenario

struct TokenBehavior {
    AccountId token;
    std::vector<std::pair<std::uint64_t, Rational>> rebase_events;
    Rational interest_rate_per_block{0};
    std::uint64_t interest_period = 100;
    std::vector<std::pair<std::uint64_t, Amount>> airdrop_events;
    int shareholder_fee_bps = 0;
};

struct PoolConfig {
    AccountId pool;
    AccountId token0;
    AccountId token1;
    Amount reserve0 = 1'000'000'000'000;
    Amount reserve1 = 1'000'000'000'000;
    int fee_bps = 30;
    // false models a protocol that never credits deposit-by-transfer.
    bool accepts_transfer_deposits = true;
};

enum class AgentKind {
    FairTrader,
    ExternalTransferTrader,
    BuggyRouterTrader,
    AggressiveAttacker,
    GeneralAttacker,
    Scavenger,
    PoolSafeguard,
};
std::string to_string(AgentKind k);
AgentKind parse_agent_kind(std::string_view text);

struct AgentConfig {
    AgentKind kind = AgentKind::FairTrader;
    AccountId account;
    std::vector<std::size_t> pools;  // indices into Scenario::pools
    Rational activity{1, 2};         // chance to start an episode per block
    Amount volume_min = 1'000'000;
    Amount volume_max = 100'000'000;
    // Claim / retry delay in blocks. Defaults depend on the kind.
    std::optional<std::uint64_t> gap_min;
    std::optional<std::uint64_t> gap_max;
    // Aggressive attackers on interest-bearing deposits.
    std::uint64_t p2_gap_min = 640;
    std::uint64_t p2_gap_max = 700;
    bool probe = false;                 // always true for GeneralAttacker
    Rational retry_share{1};            // buggy-router victims that retry
    Rational add_liquidity_share{1, 10};
};

struct Scenario {
    std::vector<PoolConfig> pools;
    std::vector<TokenBehavior> behaviors;
    std::vector<AgentConfig> agents;
    std::uint64_t horizon_blocks = 1000;
    std::uint64_t seed = 1;
    // Blocks before a keeper syncs an episode nobody will claim.
    std::uint64_t unclaimed_timeout = 50;

    static Scenario from_json(const Json& j);
    Json to_json() const;
};

class InvalidScenario : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void validate(const Scenario& s);

// ---------------------------------------------------------------------------
// Labels

enum class LabelCategory { AtomicSwap, AtomicAddLiquidity, Violation, Theft, LostToken };
enum class Strategy { A1, A2, A3 };
std::string to_string(LabelCategory c);
std::string to_string(Strategy s);

struct GroundTruthLabel {
    LabelCategory category = LabelCategory::AtomicSwap;
    std::string txid;             // single-transaction events
    std::string txid_deposit;     // two-transaction events
    std::string txid_withdrawal;
    std::optional<ViolationKind> kind;
    std::optional<DepositPattern> pattern;
    std::optional<Strategy> strategy;
    std::optional<AccountId> victim;
    std::optional<AccountId> attacker;
    AccountId pool;
    std::optional<std::uint64_t> block_gap;

    bool operator==(const GroundTruthLabel&) const = default;
};

Json to_json(const GroundTruthLabel& l);
GroundTruthLabel label_from_json(const Json& j);

struct SimulationResult {
    std::vector<CallRecord> trace;  // stream-ordered
    std::vector<GroundTruthLabel> labels;
    PoolRegistry registry;
    std::vector<PoolState> final_pools;
};

SimulationResult simulate(const Scenario& scenario);

// Deterministic address for simulator entities: "0x" + 40 hex digits.
AccountId sim_address(std::uint32_t tag, std::uint64_t n);

// Ready-made scenarios.
// Six pools over fair traffic: rebase (P1), interest (P2), transfer and
// buggy-router victims with competing attackers (P3/P4), lost tokens,
// airdrops, and an unwatched pool where buggy-router deposits stay unclaimed.
Scenario mixed_scenario(std::uint64_t seed, std::uint64_t horizon_blocks = 3000);
// One pool per strategy for indicator tests: A1 on rebases, an interest
// thief on accruals, a scavenger on rebases.
Scenario strategy_scenario(std::uint64_t seed);

}  // namespace atomscan
