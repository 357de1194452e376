#include "atomscan/amm_sim.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <tuple>

namespace atomscan {

// ---------------------------------------------------------------------------
// Pool arithmetic

Amount quote_out(const PoolState& pool, Amount dx, Direction dir) {
    int in = dir == Direction::ZeroForOne ? 0 : 1;
    u128 x = pool.reserve(in), y = pool.reserve(1 - in);
    if (x == 0 || y == 0) throw EmptyPool("pool has an empty reserve");
    u128 dx_eff = static_cast<u128>(dx) * static_cast<u128>(10000 - pool.fee_bps) / 10000;
    u128 k = x * y;
    u128 xn = x + dx_eff;
    u128 y_new = (k + xn - 1) / xn;
    return static_cast<Amount>(y - y_new);
}

Amount fair_swap(PoolState& pool, Amount dx, Direction dir) {
    if (dx == 0) throw std::invalid_argument("fair_swap: dx must be positive");
    Amount dy = quote_out(pool, dx, dir);
    int in = dir == Direction::ZeroForOne ? 0 : 1;
    pool.reserve(in) += dx;
    pool.balance(in) += dx;
    pool.reserve(1 - in) -= dy;
    pool.balance(1 - in) -= dy;
    return dy;
}

void apply_rebase(PoolState& pool, int side, const Rational& factor) {
    if (!(factor > Rational(0))) throw std::invalid_argument("rebase factor must be positive");
    Rational scaled = factor * Rational::from_i128(pool.balance(side));
    pool.balance(side) = static_cast<Amount>(scaled.floor());
}

Amount accrue_interest(PoolState& pool, int side, const Rational& rate_per_block, std::uint64_t blocks) {
    Rational inc = rate_per_block * Rational::from_i128(pool.balance(side)) * Rational::from_i128(blocks);
    Amount add = static_cast<Amount>(inc.floor());
    pool.balance(side) += add;
    return add;
}

void apply_airdrop(PoolState& pool, int side, Amount amount) { pool.balance(side) += amount; }

// ---------------------------------------------------------------------------
// Names

std::string to_string(AgentKind k) {
    switch (k) {
        case AgentKind::FairTrader: return "FairTrader";
        case AgentKind::ExternalTransferTrader: return "ExternalTransferTrader";
        case AgentKind::BuggyRouterTrader: return "BuggyRouterTrader";
        case AgentKind::AggressiveAttacker: return "AggressiveAttacker";
        case AgentKind::GeneralAttacker: return "GeneralAttacker";
        case AgentKind::Scavenger: return "Scavenger";
        case AgentKind::PoolSafeguard: return "PoolSafeguard";
    }
    return "?";
}

AgentKind parse_agent_kind(std::string_view t) {
    for (auto k : {AgentKind::FairTrader, AgentKind::ExternalTransferTrader, AgentKind::BuggyRouterTrader,
                   AgentKind::AggressiveAttacker, AgentKind::GeneralAttacker, AgentKind::Scavenger,
                   AgentKind::PoolSafeguard})
        if (to_string(k) == t) return k;
    throw InvalidScenario("unknown agent kind '" + std::string(t) + "'");
}

std::string to_string(LabelCategory c) {
    switch (c) {
        case LabelCategory::AtomicSwap: return "AtomicSwap";
        case LabelCategory::AtomicAddLiquidity: return "AtomicAddLiquidity";
        case LabelCategory::Violation: return "Violation";
        case LabelCategory::Theft: return "Theft";
        case LabelCategory::LostToken: return "LostToken";
    }
    return "?";
}

std::string to_string(Strategy s) {
    switch (s) {
        case Strategy::A1: return "A1";
        case Strategy::A2: return "A2";
        case Strategy::A3: return "A3";
    }
    return "?";
}

namespace {

LabelCategory parse_category(const std::string& t) {
    for (auto c : {LabelCategory::AtomicSwap, LabelCategory::AtomicAddLiquidity, LabelCategory::Violation,
                   LabelCategory::Theft, LabelCategory::LostToken})
        if (to_string(c) == t) return c;
    throw DecodeError("unknown label category '" + t + "'");
}

Strategy parse_strategy(const std::string& t) {
    for (auto s : {Strategy::A1, Strategy::A2, Strategy::A3})
        if (to_string(s) == t) return s;
    throw DecodeError("unknown strategy '" + t + "'");
}

}  // namespace

AccountId sim_address(std::uint32_t tag, std::uint64_t n) {
    char buf[43];
    std::snprintf(buf, sizeof buf, "0x%08x%016llx%016llx", tag, 0ULL, static_cast<unsigned long long>(n));
    return AccountId(buf);
}

Json to_json(const GroundTruthLabel& l) {
    Json j{{"category", to_string(l.category)}};
    j["txid"] = l.txid.empty() ? Json(nullptr) : Json(l.txid);
    j["txid_deposit"] = l.txid_deposit.empty() ? Json(nullptr) : Json(l.txid_deposit);
    j["txid_withdrawal"] = l.txid_withdrawal.empty() ? Json(nullptr) : Json(l.txid_withdrawal);
    j["kind"] = l.kind ? Json(to_string(*l.kind)) : Json(nullptr);
    j["pattern"] = l.pattern ? Json(to_string(*l.pattern)) : Json(nullptr);
    j["strategy"] = l.strategy ? Json(to_string(*l.strategy)) : Json(nullptr);
    j["victim"] = l.victim ? Json(l.victim->str()) : Json(nullptr);
    j["attacker"] = l.attacker ? Json(l.attacker->str()) : Json(nullptr);
    j["pool"] = l.pool.str();
    j["block_gap"] = l.block_gap ? Json(*l.block_gap) : Json(nullptr);
    return j;
}

GroundTruthLabel label_from_json(const Json& j) {
    auto str = [&](const char* k) -> std::string {
        return j.contains(k) && j[k].is_string() ? j[k].get<std::string>() : std::string{};
    };
    GroundTruthLabel l;
    l.category = parse_category(str("category"));
    l.txid = str("txid");
    l.txid_deposit = str("txid_deposit");
    l.txid_withdrawal = str("txid_withdrawal");
    if (!str("kind").empty()) l.kind = parse_violation_kind(str("kind"));
    if (!str("pattern").empty()) l.pattern = parse_deposit_pattern(str("pattern"));
    if (!str("strategy").empty()) l.strategy = parse_strategy(str("strategy"));
    if (!str("victim").empty()) l.victim = AccountId(str("victim"));
    if (!str("attacker").empty()) l.attacker = AccountId(str("attacker"));
    if (!str("pool").empty()) l.pool = AccountId(str("pool"));
    if (j.contains("block_gap") && j["block_gap"].is_number()) l.block_gap = j["block_gap"].get<std::uint64_t>();
    return l;
}

// ---------------------------------------------------------------------------
// Scenario I/O

namespace {

Rational json_rational(const Json& j) {
    if (j.is_number_integer()) return Rational(j.get<std::int64_t>());
    if (j.is_string()) return Rational::parse(j.get<std::string>());
    throw InvalidScenario("rational must be an integer or a string like \"3/2\"");
}

}  // namespace

Scenario Scenario::from_json(const Json& j) {
    try {
        Scenario s;
        s.horizon_blocks = j.at("horizon_blocks").get<std::uint64_t>();
        s.seed = j.value("seed", std::uint64_t{1});
        s.unclaimed_timeout = j.value("unclaimed_timeout", std::uint64_t{50});
        for (const auto& p : j.at("pools")) {
            PoolConfig c;
            c.pool = AccountId(p.at("pool").get<std::string>());
            c.token0 = AccountId(p.at("token0").get<std::string>());
            c.token1 = AccountId(p.at("token1").get<std::string>());
            c.reserve0 = p.value("reserve0", c.reserve0);
            c.reserve1 = p.value("reserve1", c.reserve1);
            c.fee_bps = p.value("fee_bps", c.fee_bps);
            c.accepts_transfer_deposits = p.value("accepts_transfer_deposits", true);
            s.pools.push_back(std::move(c));
        }
        if (j.contains("behaviors")) {
            for (const auto& b : j["behaviors"]) {
                TokenBehavior t;
                t.token = AccountId(b.at("token").get<std::string>());
                if (b.contains("rebase_events"))
                    for (const auto& e : b["rebase_events"])
                        t.rebase_events.emplace_back(e.at("block").get<std::uint64_t>(), json_rational(e.at("factor")));
                if (b.contains("interest_rate_per_block")) t.interest_rate_per_block = json_rational(b["interest_rate_per_block"]);
                t.interest_period = b.value("interest_period", t.interest_period);
                if (b.contains("airdrop_events"))
                    for (const auto& e : b["airdrop_events"])
                        t.airdrop_events.emplace_back(e.at("block").get<std::uint64_t>(), e.at("amount").get<Amount>());
                t.shareholder_fee_bps = b.value("shareholder_fee_bps", 0);
                s.behaviors.push_back(std::move(t));
            }
        }
        for (const auto& a : j.at("agents")) {
            AgentConfig c;
            c.kind = parse_agent_kind(a.at("kind").get<std::string>());
            c.account = AccountId(a.at("account").get<std::string>());
            for (const auto& p : a.at("pools")) c.pools.push_back(p.get<std::size_t>());
            if (a.contains("activity")) c.activity = json_rational(a["activity"]);
            c.volume_min = a.value("volume_min", c.volume_min);
            c.volume_max = a.value("volume_max", c.volume_max);
            if (a.contains("gap_min")) c.gap_min = a["gap_min"].get<std::uint64_t>();
            if (a.contains("gap_max")) c.gap_max = a["gap_max"].get<std::uint64_t>();
            c.p2_gap_min = a.value("p2_gap_min", c.p2_gap_min);
            c.p2_gap_max = a.value("p2_gap_max", c.p2_gap_max);
            c.probe = a.value("probe", false);
            if (a.contains("retry_share")) c.retry_share = json_rational(a["retry_share"]);
            if (a.contains("add_liquidity_share")) c.add_liquidity_share = json_rational(a["add_liquidity_share"]);
            s.agents.push_back(std::move(c));
        }
        return s;
    } catch (const Json::exception& e) {
        throw InvalidScenario(std::string("scenario: ") + e.what());
    } catch (const std::invalid_argument& e) {
        throw InvalidScenario(std::string("scenario: ") + e.what());
    }
}

Json Scenario::to_json() const {
    Json pools_j = Json::array();
    for (const auto& p : pools) {
        pools_j.push_back(Json{{"pool", p.pool.str()},
                               {"token0", p.token0.str()},
                               {"token1", p.token1.str()},
                               {"reserve0", p.reserve0},
                               {"reserve1", p.reserve1},
                               {"fee_bps", p.fee_bps},
                               {"accepts_transfer_deposits", p.accepts_transfer_deposits}});
    }
    Json beh = Json::array();
    for (const auto& b : behaviors) {
        Json rebases = Json::array(), drops = Json::array();
        for (const auto& [blk, f] : b.rebase_events) rebases.push_back(Json{{"block", blk}, {"factor", f.to_string()}});
        for (const auto& [blk, a] : b.airdrop_events) drops.push_back(Json{{"block", blk}, {"amount", a}});
        beh.push_back(Json{{"token", b.token.str()},
                           {"rebase_events", rebases},
                           {"interest_rate_per_block", b.interest_rate_per_block.to_string()},
                           {"interest_period", b.interest_period},
                           {"airdrop_events", drops},
                           {"shareholder_fee_bps", b.shareholder_fee_bps}});
    }
    Json agents_j = Json::array();
    for (const auto& a : agents) {
        Json e{{"kind", to_string(a.kind)},          {"account", a.account.str()},
               {"pools", a.pools},                   {"activity", a.activity.to_string()},
               {"volume_min", a.volume_min},         {"volume_max", a.volume_max}};
        if (a.gap_min) e["gap_min"] = *a.gap_min;
        if (a.gap_max) e["gap_max"] = *a.gap_max;
        e["p2_gap_min"] = a.p2_gap_min;
        e["p2_gap_max"] = a.p2_gap_max;
        e["probe"] = a.probe;
        e["retry_share"] = a.retry_share.to_string();
        e["add_liquidity_share"] = a.add_liquidity_share.to_string();
        agents_j.push_back(std::move(e));
    }
    return Json{{"seed", seed},         {"horizon_blocks", horizon_blocks}, {"unclaimed_timeout", unclaimed_timeout},
                {"pools", pools_j},     {"behaviors", beh},                 {"agents", agents_j}};
}

namespace {

bool is_claimer(AgentKind k) {
    return k == AgentKind::AggressiveAttacker || k == AgentKind::GeneralAttacker || k == AgentKind::Scavenger ||
           k == AgentKind::PoolSafeguard;
}

std::pair<std::uint64_t, std::uint64_t> default_gaps(AgentKind k) {
    switch (k) {
        case AgentKind::AggressiveAttacker: return {0, 1};
        case AgentKind::GeneralAttacker: return {1, 1};
        case AgentKind::Scavenger: return {1, 1000};
        case AgentKind::PoolSafeguard: return {0, 1};
        case AgentKind::ExternalTransferTrader: return {1, 3};
        case AgentKind::BuggyRouterTrader: return {1, 20};
        case AgentKind::FairTrader: return {0, 0};
    }
    return {0, 0};
}

std::pair<std::uint64_t, std::uint64_t> gaps_of(const AgentConfig& a) {
    auto d = default_gaps(a.kind);
    return {a.gap_min.value_or(d.first), a.gap_max.value_or(d.second)};
}

}  // namespace

void validate(const Scenario& s) {
    auto fail = [](const std::string& m) { throw InvalidScenario(m); };
    if (s.horizon_blocks == 0) fail("horizon_blocks must be positive");
    if (s.pools.empty()) fail("scenario needs at least one pool");
    std::map<AccountId, std::size_t> seen;
    for (std::size_t i = 0; i < s.pools.size(); ++i) {
        const auto& p = s.pools[i];
        if (p.token0 == p.token1) fail("pool " + p.pool.str() + ": token0 == token1");
        if (p.reserve0 == 0 || p.reserve1 == 0) fail("pool " + p.pool.str() + ": empty reserve");
        if (p.fee_bps < 0 || p.fee_bps >= 10000) fail("pool " + p.pool.str() + ": fee_bps out of range");
        if (!seen.emplace(p.pool, i).second) fail("duplicate pool " + p.pool.str());
    }
    std::vector<int> behavior_tokens(s.pools.size(), 0);
    for (const auto& b : s.behaviors) {
        for (const auto& [blk, f] : b.rebase_events)
            if (f < Rational(1)) fail("rebase factor below 1 on " + b.token.str());
        if (b.interest_rate_per_block < Rational(0)) fail("negative interest rate");
        if (b.interest_period == 0) fail("interest_period must be positive");
        if (b.shareholder_fee_bps < 0 || b.shareholder_fee_bps >= 10000) fail("shareholder_fee_bps out of range");
        for (std::size_t i = 0; i < s.pools.size(); ++i)
            if (s.pools[i].token0 == b.token || s.pools[i].token1 == b.token) ++behavior_tokens[i];
    }
    for (std::size_t i = 0; i < s.pools.size(); ++i) {
        if (behavior_tokens[i] > 1) fail("pool " + s.pools[i].pool.str() + " holds more than one non-standard token");
        if (behavior_tokens[i] && !s.pools[i].accepts_transfer_deposits)
            fail("pool " + s.pools[i].pool.str() + ": non-standard token on a pool without transfer deposits");
    }
    for (const auto& a : s.agents) {
        if (a.pools.empty()) fail("agent " + a.account.str() + " has no pools");
        auto [gmin, gmax] = gaps_of(a);
        if (gmin > gmax) fail("agent " + a.account.str() + ": gap_min > gap_max");
        if (a.p2_gap_min > a.p2_gap_max) fail("agent " + a.account.str() + ": p2_gap_min > p2_gap_max");
        if (a.volume_min == 0 || a.volume_min > a.volume_max) fail("agent " + a.account.str() + ": bad volume range");
        for (auto p : a.pools) {
            if (p >= s.pools.size()) fail("agent " + a.account.str() + ": pool index out of range");
            bool victim = a.kind == AgentKind::ExternalTransferTrader || a.kind == AgentKind::BuggyRouterTrader;
            if (victim && behavior_tokens[p])
                fail("agent " + a.account.str() + ": transfer victims cannot share a pool with a non-standard token");
            if (!s.pools[p].accepts_transfer_deposits && a.kind != AgentKind::FairTrader &&
                a.kind != AgentKind::ExternalTransferTrader)
                fail("agent " + a.account.str() + ": only fair and transfer traders may use a pool without transfer deposits");
        }
    }
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

class Rng {
public:
    explicit Rng(std::uint64_t seed) : g_(seed) {}
    std::uint64_t uniform(std::uint64_t lo, std::uint64_t hi) {
        if (hi <= lo) return lo;
        return lo + g_() % (hi - lo + 1);
    }
    bool chance(const Rational& p) {
        if (!(p > Rational(0))) return false;
        if (!(p < Rational(1))) return true;
        return static_cast<i128>(g_() % static_cast<std::uint64_t>(p.den())) < p.num();
    }
    std::uint64_t next() { return g_(); }

private:
    std::mt19937_64 g_;
};

std::uint64_t splitmix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

struct Episode {
    bool active = false;
    std::uint64_t id = 0;
    DepositPattern pattern = DepositPattern::Unknown;
    int side = 0;
    std::uint64_t source_block = 0;
    std::optional<AccountId> victim;
    std::string deposit_txid;
};

struct PoolRt {
    PoolConfig cfg;
    PoolState st;
    Episode ep;
    std::vector<std::size_t> claimers;
    Amount locked = 0;  // transfers a pool never credits
};

enum class ActionType { Claim, VictimClaim, KeeperSync, LostRetry };

struct Action {
    ActionType type = ActionType::Claim;
    std::size_t agent = 0;
    std::size_t pool = 0;
    std::uint64_t episode = 0;
    Amount amount = 0;
    int side = 0;
    std::size_t label = 0;  // LostRetry: label to complete
};

struct Call {
    std::string seq;
    AccountId caller;
    AccountId callee;
    std::string func;
    ArgMap args;
    bool success = true;
};

class Simulator {
public:
    explicit Simulator(const Scenario& s) : s_(s), rng_(splitmix(s.seed)) {
        for (const auto& p : s.pools) {
            PoolRt rt;
            rt.cfg = p;
            rt.st.reserve0 = rt.st.balance0 = p.reserve0;
            rt.st.reserve1 = rt.st.balance1 = p.reserve1;
            rt.st.fee_bps = p.fee_bps;
            pools_.push_back(std::move(rt));
        }
        for (std::size_t a = 0; a < s.agents.size(); ++a)
            if (is_claimer(s.agents[a].kind))
                for (auto p : s.agents[a].pools) pools_[p].claimers.push_back(a);
        router_ = sim_address(0xF0, 1);
        keeper_ = sim_address(0xF0, 2);
    }

    SimulationResult run() {
        for (block_ = 1; block_ <= s_.horizon_blocks; ++block_) {
            tx_index_ = 0;
            behaviors();
            for (std::size_t a = 0; a < s_.agents.size(); ++a) agent_step(a);
            scheduled();
        }
        for (auto& p : pools_) {
            if (p.ep.active && p.ep.victim) close_unclaimed(p);
        }
        SimulationResult r;
        r.trace = std::move(trace_);
        r.labels = std::move(labels_);
        std::vector<PoolInfo> infos;
        for (const auto& p : pools_) {
            infos.push_back(PoolInfo{p.cfg.pool, p.cfg.token0, p.cfg.token1, Protocol::UniswapV2Like});
            r.final_pools.push_back(p.st);
        }
        r.registry = PoolRegistry(std::move(infos));
        return r;
    }

private:
    const Scenario& s_;
    Rng rng_;
    std::vector<PoolRt> pools_;
    std::vector<CallRecord> trace_;
    std::vector<GroundTruthLabel> labels_;
    std::map<std::tuple<std::uint64_t, int, std::uint64_t>, Action> queue_;
    std::uint64_t block_ = 0;
    std::uint32_t tx_index_ = 0;
    std::uint64_t tx_counter_ = 0;
    std::uint64_t seq_counter_ = 0;
    std::uint64_t episode_counter_ = 0;
    AccountId router_, keeper_;

    std::string new_txid() {
        std::uint64_t a = splitmix(s_.seed * 0x100000001b3ULL + ++tx_counter_);
        std::uint64_t b = splitmix(a ^ tx_counter_);
        std::uint64_t c = splitmix(b);
        std::uint64_t d = splitmix(c);
        char buf[67];
        std::snprintf(buf, sizeof buf, "0x%016llx%016llx%016llx%016llx", static_cast<unsigned long long>(a),
                      static_cast<unsigned long long>(b), static_cast<unsigned long long>(c),
                      static_cast<unsigned long long>(d));
        return buf;
    }

    std::string emit(const std::vector<Call>& calls, std::uint64_t gas_price = 20) {
        std::string txid = new_txid();
        for (const auto& c : calls) {
            CallRecord r;
            r.txid = txid;
            r.block = block_;
            r.tx_index = tx_index_;
            r.caller = c.caller;
            r.callee_contract = c.callee;
            r.callee_func = c.func;
            r.call_seq = CallSeq::parse(c.seq);
            r.args = c.args;
            r.gas = 21000 + 40000 * calls.size();
            r.gas_price = gas_price;
            r.success = c.success;
            trace_.push_back(std::move(r));
        }
        ++tx_index_;
        return txid;
    }

    void schedule(std::uint64_t block, int priority, Action a) {
        if (block > s_.horizon_blocks) return;
        queue_.emplace(std::make_tuple(block, priority, ++seq_counter_), a);
    }

    static int priority_of(AgentKind k) {
        switch (k) {
            case AgentKind::AggressiveAttacker: return 0;
            case AgentKind::GeneralAttacker: return 2;
            case AgentKind::PoolSafeguard: return 3;
            case AgentKind::Scavenger: return 4;
            default: return 5;
        }
    }

    const AccountId& token(const PoolRt& p, int side) const { return side == 0 ? p.cfg.token0 : p.cfg.token1; }

    // Opens a claimable episode, or extends the running one.
    void open_episode(std::size_t pi, DepositPattern pattern, int side, std::optional<AccountId> victim,
                      const std::string& deposit_txid, Amount amount, const AgentConfig* depositor) {
        PoolRt& p = pools_[pi];
        if (p.ep.active) return;
        p.ep = Episode{true, ++episode_counter_, pattern, side, block_, victim, deposit_txid};
        bool any = false;
        for (auto a : p.claimers) {
            const AgentConfig& ag = s_.agents[a];
            bool p12 = pattern == DepositPattern::P1_NonStandardBalance || pattern == DepositPattern::P2_Interest;
            if (ag.kind == AgentKind::PoolSafeguard && !p12) continue;
            auto [gmin, gmax] = gaps_of(ag);
            if (ag.kind == AgentKind::AggressiveAttacker && pattern == DepositPattern::P2_Interest) {
                gmin = ag.p2_gap_min;
                gmax = ag.p2_gap_max;
            }
            std::uint64_t at = block_ + rng_.uniform(gmin, gmax);
            if (at <= s_.horizon_blocks) any = true;
            schedule(at, priority_of(ag.kind), Action{ActionType::Claim, a, pi, p.ep.id, amount, side, 0});
        }
        if (depositor) {
            bool retry = depositor->kind == AgentKind::ExternalTransferTrader || rng_.chance(depositor->retry_share);
            if (retry) {
                auto [gmin, gmax] = gaps_of(*depositor);
                std::uint64_t at = block_ + rng_.uniform(gmin, gmax);
                if (at <= s_.horizon_blocks) any = true;
                std::size_t ai = static_cast<std::size_t>(depositor - s_.agents.data());
                schedule(at, 1, Action{ActionType::VictimClaim, ai, pi, p.ep.id, amount, side, 0});
            }
        }
        if (!any) schedule(block_ + s_.unclaimed_timeout, 6, Action{ActionType::KeeperSync, 0, pi, p.ep.id, 0, side, 0});
    }

    // -- phase A: token behaviors --------------------------------------------
    void behaviors() {
        for (std::size_t bi = 0; bi < s_.behaviors.size(); ++bi) {
            const TokenBehavior& b = s_.behaviors[bi];
            AccountId issuer = sim_address(0xF1, bi);
            for (const auto& [blk, factor] : b.rebase_events) {
                if (blk != block_) continue;
                std::vector<std::pair<std::size_t, Amount>> gains;
                for (std::size_t pi = 0; pi < pools_.size(); ++pi) {
                    int side = side_of(pools_[pi], b.token);
                    if (side < 0) continue;
                    Amount before = pools_[pi].st.balance(side);
                    apply_rebase(pools_[pi].st, side, factor);
                    gains.emplace_back(pi, pools_[pi].st.balance(side) - before);
                }
                std::string tx = emit({Call{"0", issuer, b.token, "rebase",
                                            {{"factor_num", static_cast<std::uint64_t>(factor.num())},
                                             {"factor_den", static_cast<std::uint64_t>(factor.den())}},
                                            true}});
                for (auto [pi, g] : gains)
                    if (g > 0)
                        open_episode(pi, DepositPattern::P1_NonStandardBalance, side_of(pools_[pi], b.token), std::nullopt,
                                     tx, g, nullptr);
            }
            for (const auto& [blk, amount] : b.airdrop_events) {
                if (blk != block_) continue;
                for (std::size_t pi = 0; pi < pools_.size(); ++pi) {
                    int side = side_of(pools_[pi], b.token);
                    if (side < 0 || amount == 0) continue;
                    apply_airdrop(pools_[pi].st, side, amount);
                    std::string tx = emit({Call{"0", issuer, b.token, "airdrop",
                                                {{"to", pools_[pi].cfg.pool.str()}, {"amount", amount}}, true}});
                    open_episode(pi, DepositPattern::P1_NonStandardBalance, side, std::nullopt, tx, amount, nullptr);
                }
            }
            if (b.interest_rate_per_block > Rational(0) && block_ % b.interest_period == 0) {
                for (std::size_t pi = 0; pi < pools_.size(); ++pi) {
                    int side = side_of(pools_[pi], b.token);
                    if (side < 0) continue;
                    Amount inc = accrue_interest(pools_[pi].st, side, b.interest_rate_per_block, b.interest_period);
                    if (inc == 0) continue;
                    std::string tx = emit({Call{"0", issuer, b.token, "accrueInterest",
                                                {{"account", pools_[pi].cfg.pool.str()}, {"amount", inc}}, true}});
                    open_episode(pi, DepositPattern::P2_Interest, side, std::nullopt, tx, inc, nullptr);
                }
            }
        }
    }

    static int side_of(const PoolRt& p, const AccountId& t) {
        if (p.cfg.token0 == t) return 0;
        if (p.cfg.token1 == t) return 1;
        return -1;
    }

    const TokenBehavior* behavior_of(const AccountId& t) const {
        for (const auto& b : s_.behaviors)
            if (b.token == t) return &b;
        return nullptr;
    }

    // -- phase B: agents -----------------------------------------------------
    void agent_step(std::size_t ai) {
        const AgentConfig& a = s_.agents[ai];
        if (is_claimer(a.kind)) return;
        if (!rng_.chance(a.activity)) return;
        std::size_t pi = a.pools[rng_.uniform(0, a.pools.size() - 1)];
        PoolRt& p = pools_[pi];
        if (p.ep.active) return;
        switch (a.kind) {
            case AgentKind::FairTrader:
                if (rng_.chance(a.add_liquidity_share))
                    add_liquidity(a, pi);
                else
                    router_swap(a.account, pi, static_cast<int>(rng_.uniform(0, 1)), volume(a, p, -1));
                break;
            case AgentKind::ExternalTransferTrader: external_transfer(a, pi); break;
            case AgentKind::BuggyRouterTrader: buggy_router(a, pi); break;
            default: break;
        }
    }

    Amount volume(const AgentConfig& a, const PoolRt& p, int side) {
        Amount v = rng_.uniform(a.volume_min, a.volume_max);
        Amount cap = std::max<Amount>(1, (side < 0 ? std::min(p.st.reserve0, p.st.reserve1) : p.st.reserve(side)) / 20);
        return std::min(v, cap);
    }

    std::string router_swap(const AccountId& trader, std::size_t pi, int side_in, Amount dx) {
        PoolRt& p = pools_[pi];
        Direction dir = side_in == 0 ? Direction::ZeroForOne : Direction::OneForZero;
        Amount dy = quote_out(p.st, dx, dir);
        if (dy == 0) return {};
        fair_swap(p.st, dx, dir);
        const AccountId& tin = token(p, side_in);
        const AccountId& tout = token(p, 1 - side_in);
        std::vector<Call> calls{
            {"0", trader, router_, "swapExactTokensForTokens",
             {{"amountIn", dx}, {"amountOutMin", dy}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}}, true},
            {"0.0", router_, tin, "transferFrom", {{"from", trader.str()}, {"to", p.cfg.pool.str()}, {"amount", dx}}, true},
            {"0.1", router_, p.cfg.pool, "swap",
             {{"amountIn", dx}, {"amountOut", dy}, {"to", trader.str()}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}},
             true},
            {"0.1.0", p.cfg.pool, tout, "transfer", {{"to", trader.str()}, {"amount", dy}}, true},
        };
        // Shareholder-fee tokens redistribute to the other pools on every transfer.
        std::vector<std::pair<std::size_t, Amount>> reflected;
        if (const TokenBehavior* b = behavior_of(tin); b && b->shareholder_fee_bps > 0) {
            std::vector<std::size_t> holders;
            for (std::size_t q = 0; q < pools_.size(); ++q)
                if (q != pi && side_of(pools_[q], tin) >= 0) holders.push_back(q);
            if (!holders.empty()) {
                Amount share = dx * static_cast<Amount>(b->shareholder_fee_bps) / 10000 / holders.size();
                std::uint32_t k = 0;
                for (auto q : holders) {
                    if (share == 0) break;
                    calls.push_back({"0.0." + std::to_string(k++), tin, tin, "reflect",
                                     {{"to", pools_[q].cfg.pool.str()}, {"amount", share}}, true});
                    reflected.emplace_back(q, share);
                }
                std::sort(calls.begin(), calls.end(), [](const Call& x, const Call& y) {
                    return CallSeq::parse(x.seq) < CallSeq::parse(y.seq);
                });
            }
        }
        std::string tx = emit(calls);
        GroundTruthLabel l;
        l.category = LabelCategory::AtomicSwap;
        l.txid = tx;
        l.pool = p.cfg.pool;
        labels_.push_back(std::move(l));
        for (auto [q, share] : reflected) {
            int side = side_of(pools_[q], tin);
            apply_airdrop(pools_[q].st, side, share);
            open_episode(q, DepositPattern::P1_NonStandardBalance, side, std::nullopt, tx, share, nullptr);
        }
        return tx;
    }

    void add_liquidity(const AgentConfig& a, std::size_t pi) {
        PoolRt& p = pools_[pi];
        Amount a0 = volume(a, p, 0);
        Amount a1 = static_cast<Amount>(static_cast<u128>(a0) * p.st.reserve1 / p.st.reserve0);
        if (a0 == 0 || a1 == 0) return;
        p.st.reserve0 += a0;
        p.st.balance0 += a0;
        p.st.reserve1 += a1;
        p.st.balance1 += a1;
        Amount liquidity = a0;
        std::string tx = emit({
            {"0", a.account, router_, "addLiquidity", {{"amount0", a0}, {"amount1", a1}}, true},
            {"0.0", router_, p.cfg.token0, "transferFrom", {{"from", a.account.str()}, {"to", p.cfg.pool.str()}, {"amount", a0}}, true},
            {"0.1", router_, p.cfg.token1, "transferFrom", {{"from", a.account.str()}, {"to", p.cfg.pool.str()}, {"amount", a1}}, true},
            {"0.2", router_, p.cfg.pool, "mint",
             {{"amount0", a0}, {"amount1", a1}, {"to", a.account.str()}, {"liquidity", liquidity}}, true},
        });
        GroundTruthLabel l;
        l.category = LabelCategory::AtomicAddLiquidity;
        l.txid = tx;
        l.pool = p.cfg.pool;
        labels_.push_back(std::move(l));
    }

    void external_transfer(const AgentConfig& a, std::size_t pi) {
        PoolRt& p = pools_[pi];
        int side = static_cast<int>(rng_.uniform(0, 1));
        Amount amount = volume(a, p, side);
        std::string tx = emit({{"0", a.account, token(p, side), "transfer", {{"to", p.cfg.pool.str()}, {"amount", amount}}, true}});
        if (!p.cfg.accepts_transfer_deposits) {
            p.locked += amount;
            GroundTruthLabel l;
            l.category = LabelCategory::LostToken;
            l.kind = ViolationKind::II_StandaloneDeposit;
            l.pattern = DepositPattern::P3_ExternalTransfer;
            l.txid_deposit = tx;
            l.victim = a.account;
            l.pool = p.cfg.pool;
            labels_.push_back(std::move(l));
            auto [gmin, gmax] = gaps_of(a);
            std::size_t ai = static_cast<std::size_t>(&a - s_.agents.data());
            schedule(block_ + rng_.uniform(gmin, gmax), 7,
                     Action{ActionType::LostRetry, ai, pi, 0, amount, side, labels_.size() - 1});
            return;
        }
        p.st.balance(side) += amount;
        open_episode(pi, DepositPattern::P3_ExternalTransfer, side, a.account, tx, amount, &a);
    }

    void buggy_router(const AgentConfig& a, std::size_t pi) {
        PoolRt& p = pools_[pi];
        int side = static_cast<int>(rng_.uniform(0, 1));
        Amount amount = volume(a, p, side);
        Direction dir = side == 0 ? Direction::ZeroForOne : Direction::OneForZero;
        Amount quote = quote_out(p.st, amount, dir);
        const AccountId& tin = token(p, side);
        const AccountId& tout = token(p, 1 - side);
        std::string tx = emit({
            {"0", a.account, router_, "swapExactTokensForTokens", {{"amountIn", amount}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}}, true},
            {"0.0", router_, tin, "transferFrom", {{"from", a.account.str()}, {"to", p.cfg.pool.str()}, {"amount", amount}}, true},
            {"0.1", router_, p.cfg.pool, "swap",
             {{"amountIn", amount}, {"amountOut", quote + quote / 100 + 1}, {"to", a.account.str()}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}},
             false},
        });
        p.st.balance(side) += amount;
        open_episode(pi, DepositPattern::P4_BuggyRouter, side, a.account, tx, amount, &a);
    }

    // -- phase C: scheduled actions ------------------------------------------
    void scheduled() {
        while (!queue_.empty()) {
            auto it = queue_.begin();
            if (std::get<0>(it->first) != block_) break;
            Action act = it->second;
            queue_.erase(it);
            switch (act.type) {
                case ActionType::Claim: claim(act); break;
                case ActionType::VictimClaim: victim_claim(act); break;
                case ActionType::KeeperSync: keeper_sync(act); break;
                case ActionType::LostRetry: lost_retry(act); break;
            }
        }
    }

    // Takes the whole extractable balance of the episode's side.
    Amount take_extractable(PoolRt& p, int side, Amount& dy) {
        Amount dx = p.st.extractable(side);
        Direction dir = side == 0 ? Direction::ZeroForOne : Direction::OneForZero;
        dy = quote_out(p.st, dx, dir);
        p.st.reserve(side) = p.st.balance(side);
        p.st.balance(1 - side) -= dy;
        p.st.reserve(1 - side) = p.st.balance(1 - side);
        return dx;
    }

    void claim(const Action& act) {
        PoolRt& p = pools_[act.pool];
        const AgentConfig& ag = s_.agents[act.agent];
        AccountId bot = sim_address(0xF2, act.agent);
        bool live = p.ep.active && p.ep.id == act.episode && p.st.extractable(act.side) > 0;
        const AccountId& tin = token(p, act.side);
        const AccountId& tout = token(p, 1 - act.side);
        Amount dx = act.amount, dy = 0;
        if (live) dx = take_extractable(p, act.side, dy);

        std::vector<Call> calls{{"0", ag.account, bot, "execute", {}, true}};
        std::uint32_t k = 0;
        if (ag.kind == AgentKind::GeneralAttacker || ag.probe) {
            calls.push_back({"0." + std::to_string(k++), bot, p.cfg.pool, "getReserves", {}, true});
            calls.push_back({"0." + std::to_string(k++), bot, tin, "balanceOf", {{"account", p.cfg.pool.str()}}, true});
        }
        std::string sseq = "0." + std::to_string(k);
        calls.push_back({sseq, bot, p.cfg.pool, "swap",
                         {{"amountIn", dx}, {"amountOut", dy}, {"to", ag.account.str()}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}},
                         live});
        if (live) calls.push_back({sseq + ".0", p.cfg.pool, tout, "transfer", {{"to", ag.account.str()}, {"amount", dy}}, true});
        std::string tx = emit(calls, ag.kind == AgentKind::AggressiveAttacker ? 60 : 25);
        if (!live) return;

        GroundTruthLabel l;
        bool deposit_side = p.ep.victim.has_value();
        l.kind = deposit_side ? ViolationKind::III_AccountMismatch : ViolationKind::I_StandaloneWithdrawal;
        l.pattern = p.ep.pattern;
        l.pool = p.cfg.pool;
        l.victim = p.ep.victim;
        l.block_gap = block_ - p.ep.source_block;
        if (deposit_side) {
            l.txid_deposit = p.ep.deposit_txid;
            l.txid_withdrawal = tx;
        } else {
            l.txid = tx;
        }
        switch (ag.kind) {
            case AgentKind::AggressiveAttacker: l.strategy = Strategy::A1; break;
            case AgentKind::GeneralAttacker: l.strategy = Strategy::A2; break;
            case AgentKind::Scavenger: l.strategy = Strategy::A3; break;
            default: break;
        }
        if (l.strategy) {
            l.category = LabelCategory::Theft;
            l.attacker = ag.account;
        } else {
            l.category = LabelCategory::Violation;
        }
        labels_.push_back(std::move(l));
        p.ep.active = false;
    }

    void victim_claim(const Action& act) {
        PoolRt& p = pools_[act.pool];
        const AgentConfig& ag = s_.agents[act.agent];
        bool live = p.ep.active && p.ep.id == act.episode && p.st.extractable(act.side) > 0;
        const AccountId& tin = token(p, act.side);
        const AccountId& tout = token(p, 1 - act.side);
        Amount dx = act.amount, dy = 0;
        if (live) dx = take_extractable(p, act.side, dy);
        std::vector<Call> calls{{"0", ag.account, p.cfg.pool, "swap",
                                 {{"amountIn", dx}, {"amountOut", dy}, {"to", ag.account.str()}, {"tokenIn", tin.str()}, {"tokenOut", tout.str()}},
                                 live}};
        if (live) calls.push_back({"0.0", p.cfg.pool, tout, "transfer", {{"to", ag.account.str()}, {"amount", dy}}, true});
        std::string tx = emit(calls);
        if (!live) return;
        GroundTruthLabel l;
        l.category = LabelCategory::AtomicSwap;
        l.txid_deposit = p.ep.deposit_txid;
        l.txid_withdrawal = tx;
        l.pool = p.cfg.pool;
        l.pattern = p.ep.pattern;
        l.block_gap = block_ - p.ep.source_block;
        labels_.push_back(std::move(l));
        p.ep.active = false;
    }

    void close_unclaimed(PoolRt& p) {
        GroundTruthLabel l;
        l.category = LabelCategory::Violation;
        l.kind = ViolationKind::II_StandaloneDeposit;
        l.pattern = p.ep.pattern;
        l.txid = p.ep.deposit_txid;
        l.victim = p.ep.victim;
        l.pool = p.cfg.pool;
        labels_.push_back(std::move(l));
        p.ep.active = false;
    }

    void keeper_sync(const Action& act) {
        PoolRt& p = pools_[act.pool];
        if (!p.ep.active || p.ep.id != act.episode) return;
        emit({{"0", keeper_, p.cfg.pool, "sync", {}, true}});
        p.st.reserve0 = p.st.balance0;
        p.st.reserve1 = p.st.balance1;
        if (p.ep.victim)
            close_unclaimed(p);
        else
            p.ep.active = false;
    }

    void lost_retry(const Action& act) {
        const AgentConfig& ag = s_.agents[act.agent];
        PoolRt& p = pools_[act.pool];
        if (p.ep.active) {
            // Pool busy; try again next block.
            schedule(block_ + 1, 7, act);
            return;
        }
        std::string tx = router_swap(ag.account, act.pool, act.side, act.amount);
        if (tx.empty()) return;
        labels_[act.label].txid_withdrawal = tx;
        labels_[act.label].block_gap = block_ - trace_block_of(labels_[act.label].txid_deposit);
    }

    std::uint64_t trace_block_of(const std::string& txid) const {
        for (auto it = trace_.rbegin(); it != trace_.rend(); ++it)
            if (it->txid == txid) return it->block;
        return block_;
    }
};

}  // namespace

SimulationResult simulate(const Scenario& scenario) {
    validate(scenario);
    Simulator sim(scenario);
    return sim.run();
}

// ---------------------------------------------------------------------------
// Ready-made scenarios

namespace {

AgentConfig agent(AgentKind k, std::uint64_t id, std::vector<std::size_t> pools) {
    AgentConfig a;
    a.kind = k;
    a.account = sim_address(0xA0, id);
    a.pools = std::move(pools);
    return a;
}

PoolConfig pool(std::uint64_t id, std::uint64_t t0, std::uint64_t t1) {
    PoolConfig p;
    p.pool = sim_address(0xC0, id);
    p.token0 = sim_address(0xB0, t0);
    p.token1 = sim_address(0xB0, t1);
    return p;
}

}  // namespace

Scenario mixed_scenario(std::uint64_t seed, std::uint64_t horizon_blocks) {
    Rng r(splitmix(seed ^ 0x5eedULL));
    Scenario s;
    s.seed = seed;
    s.horizon_blocks = horizon_blocks;
    s.pools = {pool(0, 0, 1), pool(1, 0, 2), pool(2, 0, 3), pool(3, 0, 4), pool(4, 0, 5), pool(5, 0, 6)};
    s.pools[3].accepts_transfer_deposits = false;

    TokenBehavior rebase;
    rebase.token = s.pools[0].token1;
    for (std::uint64_t b = r.uniform(50, 250); b < horizon_blocks; b += r.uniform(150, 400))
        rebase.rebase_events.emplace_back(b, Rational(static_cast<i128>(1000 + r.uniform(1, 10)), 1000));
    TokenBehavior interest;
    interest.token = s.pools[1].token1;
    interest.interest_rate_per_block = Rational(1, 100000);
    interest.interest_period = 100;
    TokenBehavior drop;
    drop.token = s.pools[4].token1;
    for (std::uint64_t b = r.uniform(50, 250); b < horizon_blocks; b += r.uniform(200, 500))
        drop.airdrop_events.emplace_back(b, r.uniform(1'000'000, 50'000'000));
    s.behaviors = {rebase, interest, drop};

    std::uint64_t id = 0;
    for (int i = 0; i < 6; ++i) {
        AgentConfig f = agent(AgentKind::FairTrader, id++, {0, 1, 2, 3, 4, 5});
        f.activity = Rational(1, 4);
        s.agents.push_back(f);
    }
    AgentConfig a1 = agent(AgentKind::AggressiveAttacker, id++, {0, 1, 2});
    AgentConfig a1b = agent(AgentKind::AggressiveAttacker, id++, {0, 2});
    a1b.gap_min = 0;
    a1b.gap_max = 2;
    AgentConfig a2 = agent(AgentKind::GeneralAttacker, id++, {2, 4});
    AgentConfig a3 = agent(AgentKind::Scavenger, id++, {4});
    AgentConfig guard = agent(AgentKind::PoolSafeguard, id++, {4});
    guard.gap_min = 0;
    guard.gap_max = 1;
    AgentConfig p3 = agent(AgentKind::ExternalTransferTrader, id++, {2});
    p3.activity = Rational(1, 60);
    AgentConfig p4 = agent(AgentKind::BuggyRouterTrader, id++, {2, 5});
    p4.activity = Rational(1, 60);
    p4.retry_share = Rational(1, 2);
    AgentConfig lost = agent(AgentKind::ExternalTransferTrader, id++, {3});
    lost.activity = Rational(1, 80);
    lost.gap_min = 1;
    lost.gap_max = 60;
    s.agents.insert(s.agents.end(), {a1, a1b, a2, a3, guard, p3, p4, lost});
    return s;
}

Scenario strategy_scenario(std::uint64_t seed) {
    Rng r(splitmix(seed ^ 0xa11ceULL));
    Scenario s;
    s.seed = seed;
    s.horizon_blocks = 12000;
    s.pools = {pool(10, 10, 11), pool(11, 10, 12), pool(12, 10, 13)};
    TokenBehavior reb_a;
    reb_a.token = s.pools[0].token1;
    for (std::uint64_t b = r.uniform(20, 120); b < s.horizon_blocks; b += r.uniform(80, 200))
        reb_a.rebase_events.emplace_back(b, Rational(static_cast<i128>(1000 + r.uniform(1, 5)), 1000));
    TokenBehavior interest;
    interest.token = s.pools[1].token1;
    interest.interest_rate_per_block = Rational(1, 200000);
    interest.interest_period = 100;
    TokenBehavior reb_c;
    reb_c.token = s.pools[2].token1;
    for (std::uint64_t b = r.uniform(20, 120); b < s.horizon_blocks; b += r.uniform(150, 400))
        reb_c.rebase_events.emplace_back(b, Rational(static_cast<i128>(1000 + r.uniform(1, 5)), 1000));
    s.behaviors = {reb_a, interest, reb_c};

    std::uint64_t id = 100;
    for (int i = 0; i < 3; ++i) {
        AgentConfig f = agent(AgentKind::FairTrader, id++, {0, 1, 2});
        f.activity = Rational(1, 10);
        s.agents.push_back(f);
    }
    AgentConfig a1 = agent(AgentKind::AggressiveAttacker, id++, {0});
    AgentConfig thief = agent(AgentKind::AggressiveAttacker, id++, {1});
    AgentConfig scav = agent(AgentKind::Scavenger, id++, {2});
    s.agents.insert(s.agents.end(), {a1, thief, scav});
    return s;
}

}  // namespace atomscan
