#include "atomscan/attack_detect.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

namespace atomscan {

namespace {

std::optional<Rational> json_threshold(const Json& j, const char* key, const std::optional<Rational>& fallback) {
    if (!j.contains(key)) return fallback;
    const Json& v = j[key];
    if (v.is_null()) return std::nullopt;
    if (v.is_number_integer()) return Rational(v.get<std::int64_t>());
    if (v.is_string()) return Rational::parse(v.get<std::string>());
    if (v.is_number_float()) {
        // Round-trip through the shortest decimal text so 19.28 stays 1928/100.
        std::ostringstream os;
        os << v.get<double>();
        return Rational::parse(os.str());
    }
    throw std::invalid_argument(std::string("params: bad value for ") + key);
}

Json threshold_json(const std::optional<Rational>& r) {
    if (!r) return nullptr;
    if (r->den() == 1) return static_cast<std::int64_t>(r->num());
    return r->to_string();
}

}  // namespace

DetectionParams DetectionParams::from_json(const Json& j) {
    DetectionParams p;
    p.x1 = json_threshold(j, "x1", p.x1);
    p.x2 = json_threshold(j, "x2", p.x2);
    p.x3 = json_threshold(j, "x3", p.x3);
    p.x4 = json_threshold(j, "x4", p.x4);
    p.x6 = json_threshold(j, "x6", p.x6);
    if (auto s = json_threshold(j, "scavenger_spread", p.scavenger_spread)) p.scavenger_spread = *s;
    for (const auto* x : {&p.x1, &p.x2, &p.x3, &p.x4, &p.x6})
        if (*x && **x < Rational(0)) throw std::invalid_argument("params: thresholds must be non-negative");
    return p;
}

DetectionParams DetectionParams::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open params file " + path);
    return from_json(Json::parse(in));
}

Json DetectionParams::to_json() const {
    return Json{{"x1", threshold_json(x1)},
                {"x2", threshold_json(x2)},
                {"x3", threshold_json(x3)},
                {"x4", threshold_json(x4)},
                {"x6", threshold_json(x6)},
                {"scavenger_spread", threshold_json(scavenger_spread)}};
}

// ---------------------------------------------------------------------------
// TraceIndex

TraceIndex::TraceIndex(const std::vector<CallRecord>& stream, const PoolRegistry& registry)
    : stream_(stream), registry_(registry) {
    std::map<AccountId, std::vector<AccountId>> pools_of_token;
    for (const auto& p : registry.pools()) {
        if (p.protocol != Protocol::UniswapV2Like) continue;
        pools_of_token[p.token0].push_back(p.pool);
        pools_of_token[p.token1].push_back(p.pool);
        events_[p.pool];
    }
    for (std::size_t i = 0; i < stream.size(); ++i) {
        const CallRecord& r = stream[i];
        tx_[r.txid].push_back(i);
        if (r.call_seq.depth() == 1 && !origin_.count(r.txid)) origin_[r.txid] = r.caller;
    }
    // Records at depth > 1 with no top-level call fall back to their own caller.
    for (const auto& r : stream)
        if (!origin_.count(r.txid)) origin_[r.txid] = r.caller;

    auto add = [&](const AccountId& pool, std::size_t i) -> PoolEvent& {
        const CallRecord& r = stream[i];
        auto& v = events_[pool];
        PoolEvent e;
        e.key = r.key();
        e.block = r.block;
        e.record = i;
        e.sender = origin_.at(r.txid);
        e.success = r.success;
        v.push_back(std::move(e));
        return v.back();
    };

    for (std::size_t i = 0; i < stream.size(); ++i) {
        const CallRecord& r = stream[i];
        const std::string& f = r.callee_func;
        if (const PoolInfo* p = registry.find(r.callee_contract); p && p->protocol == Protocol::UniswapV2Like) {
            if (f == "swap" || f == "mint" || f == "burn") {
                PoolEvent& e = add(p->pool, i);
                e.withdrawal = true;
                e.sync = r.success;
                e.standalone = !tx_has_deposit(r.txid, p->pool);
            } else if (f == "sync" || f == "skim") {
                if (r.success) add(p->pool, i).sync = true;
            } else if (f == "getReserves") {
                add(p->pool, i).probe = true;
            }
            continue;
        }
        if (!r.success) continue;
        auto token_pools = pools_of_token.find(r.callee_contract);
        if (token_pools == pools_of_token.end()) continue;
        if (f == "rebase") {
            for (const auto& pool : token_pools->second) add(pool, i).marker = DepositPattern::P1_NonStandardBalance;
            continue;
        }
        std::optional<DepositPattern> pat;
        std::optional<AccountId> target;
        if (f == "airdrop" || f == "reflect") {
            pat = DepositPattern::P1_NonStandardBalance;
            target = r.arg_account("to");
        } else if (f == "accrueInterest") {
            pat = DepositPattern::P2_Interest;
            target = r.arg_account("account");
        } else if (f == "transfer" || f == "transferFrom") {
            auto to = r.arg_account("to");
            if (to && events_.count(*to)) add(*to, i).deposit = true;
            continue;
        }
        if (pat && target && events_.count(*target)) add(*target, i).marker = pat;
    }
}

const std::vector<TraceIndex::PoolEvent>& TraceIndex::events(const AccountId& pool) const {
    static const std::vector<PoolEvent> empty;
    auto it = events_.find(pool);
    return it == events_.end() ? empty : it->second;
}

const std::vector<std::size_t>& TraceIndex::tx_records(const std::string& txid) const {
    static const std::vector<std::size_t> empty;
    auto it = tx_.find(txid);
    return it == tx_.end() ? empty : it->second;
}

const AccountId& TraceIndex::origin(const std::string& txid) const {
    static const AccountId none;
    auto it = origin_.find(txid);
    return it == origin_.end() ? none : it->second;
}

bool TraceIndex::tx_has_deposit(const std::string& txid, const AccountId& pool) const {
    for (auto i : tx_records(txid)) {
        const CallRecord& r = stream_[i];
        if (!r.success || (r.callee_func != "transfer" && r.callee_func != "transferFrom")) continue;
        if (auto to = r.arg_account("to"); to && *to == pool) return true;
    }
    return false;
}

bool TraceIndex::tx_has_failed_pool_call(const std::string& txid, const AccountId& pool) const {
    for (auto i : tx_records(txid)) {
        const CallRecord& r = stream_[i];
        if (!r.success && r.callee_contract == pool &&
            (r.callee_func == "swap" || r.callee_func == "mint" || r.callee_func == "burn"))
            return true;
    }
    return false;
}

bool TraceIndex::tx_has_probe(const std::string& txid, const AccountId& pool) const {
    const PoolInfo* p = registry_.find(pool);
    if (!p) return false;
    bool reserves = false, balance = false;
    for (auto i : tx_records(txid)) {
        const CallRecord& r = stream_[i];
        if (r.callee_contract == pool && r.callee_func == "getReserves") reserves = true;
        if (r.callee_func == "balanceOf" && (r.callee_contract == p->token0 || r.callee_contract == p->token1))
            balance = true;
    }
    return reserves && balance;
}

bool TraceIndex::probed_before(const StreamKey& key, const std::string& txid, const AccountId& pool) const {
    if (tx_has_probe(txid, pool)) return true;
    const AccountId& who = origin(txid);
    // Earlier transactions of the same block with the same origin.
    const auto& recs = tx_records(txid);
    if (recs.empty()) return false;
    std::size_t first = recs.front();
    std::set<std::string> seen;
    for (std::size_t i = first; i-- > 0;) {
        const CallRecord& r = stream_[i];
        if (r.block != key.block) break;
        if (!seen.insert(r.txid).second) continue;
        if (origin(r.txid) == who && tx_has_probe(r.txid, pool)) return true;
    }
    return false;
}

// ---------------------------------------------------------------------------
// Risky withdrawals

namespace {

using Events = std::vector<TraceIndex::PoolEvent>;

std::size_t position_of(const Events& ev, const StreamKey& key) {
    return static_cast<std::size_t>(
        std::lower_bound(ev.begin(), ev.end(), key, [](const auto& e, const StreamKey& k) { return e.key < k; }) -
        ev.begin());
}

// First balance marker after the last sync point before `key`.
std::optional<std::size_t> source_marker(const Events& ev, const StreamKey& key) {
    std::optional<std::size_t> found;
    for (std::size_t i = position_of(ev, key); i-- > 0;) {
        if (ev[i].sync) break;
        if (ev[i].marker) found = i;
    }
    return found;
}

DepositPattern deposit_pattern(const DepositRecord& d, const TraceIndex& index) {
    if (index.tx_has_failed_pool_call(d.txid, d.pool)) return DepositPattern::P4_BuggyRouter;
    if (d.call_seq.depth() == 1 && d.origin_func == DepositOrigin::Transfer) return DepositPattern::P3_ExternalTransfer;
    return DepositPattern::Unknown;
}

}  // namespace

std::vector<RiskyWithdrawal> collect_risky(const std::map<AccountId, DetectionReport>& reports,
                                           const TraceIndex& index) {
    std::vector<RiskyWithdrawal> out;
    for (const auto& [pool, report] : reports) {
        const Events& ev = index.events(pool);
        for (const auto& v : report.violations) {
            if (v.kind != ViolationKind::I_StandaloneWithdrawal && v.kind != ViolationKind::III_AccountMismatch) continue;
            if (v.withdrawals.empty()) continue;
            const WithdrawalRecord& w = v.withdrawals.front();
            RiskyWithdrawal r;
            r.account = w.withdrawer;
            r.pool = pool;
            r.kind = v.kind;
            r.withdrawal_txid = w.txid;
            r.withdrawal_key = w.key();
            r.withdrawal_block = w.block;
            r.source_block = w.block;
            if (v.kind == ViolationKind::I_StandaloneWithdrawal) {
                if (auto m = source_marker(ev, w.key())) {
                    r.pattern = *ev[*m].marker;
                    r.source_key = ev[*m].key;
                    r.source_block = ev[*m].block;
                    r.block_gap = w.block - ev[*m].block;
                }
            } else {
                const DepositRecord& d = v.deposits.front();
                r.pattern = deposit_pattern(d, index);
                r.source_key = d.key();
                r.source_block = d.block;
                r.block_gap = w.block - d.block;
            }
            r.probed = index.probed_before(w.key(), w.txid, pool);
            r.deposit_in_tx = index.tx_has_deposit(w.txid, pool);
            r.competitors = count_competitors(r, index);
            out.push_back(std::move(r));
        }
    }
    std::sort(out.begin(), out.end(), [](const RiskyWithdrawal& a, const RiskyWithdrawal& b) {
        return std::tie(a.withdrawal_key, a.pool) < std::tie(b.withdrawal_key, b.pool);
    });
    return out;
}

std::map<AccountId, std::vector<Attempt>> expand_attempts(const RiskyWithdrawal& r, const TraceIndex& index) {
    std::map<AccountId, std::vector<Attempt>> out;
    if (!r.source_key) return out;
    const Events& ev = index.events(r.pool);
    std::size_t begin = position_of(ev, *r.source_key);
    std::size_t wpos = position_of(ev, r.withdrawal_key);
    for (std::size_t i = begin + 1; i < ev.size(); ++i) {
        const auto& e = ev[i];
        if (i > wpos && (e.deposit || e.marker)) break;
        if (!e.withdrawal && !e.probe) continue;
        const CallRecord& c = index.stream()[e.record];
        out[e.sender].push_back(Attempt{c.txid, c.block, c.call_seq, c.callee_func, c.success});
    }
    return out;
}

std::size_t count_competitors(const RiskyWithdrawal& r, const TraceIndex& index) {
    const Events& ev = index.events(r.pool);
    std::set<AccountId> others;
    StreamKey lo{r.source_block, 0, {}};
    for (std::size_t i = position_of(ev, lo); i < ev.size() && ev[i].block <= r.withdrawal_block + 10; ++i) {
        const auto& e = ev[i];
        if (e.sender == r.account) continue;
        bool competing = e.probe || (e.withdrawal && (!e.success || e.standalone));
        if (competing) others.insert(e.sender);
    }
    return others.size();
}

// ---------------------------------------------------------------------------
// Indicators

double IndicatorVector::gap_stddev() const { return std::sqrt(gap_variance.to_double()); }

Json to_json(const IndicatorVector& v) {
    auto opt = [](const std::optional<Rational>& r) { return r ? Json(r->to_string()) : Json(nullptr); };
    Json i3 = v.i3_infinite ? Json("inf") : opt(v.i3);
    return Json{{"account", v.account.str()},  {"swap_count", v.swap_count}, {"i1", opt(v.i1)},
                {"i2", opt(v.i2)},             {"i3", i3},                   {"i4", v.i4.to_string()},
                {"i5", v.i5},                  {"i6", v.i6.to_string()},     {"i7", v.i7},
                {"gap_variance", v.gap_variance.to_string()}};
}

IndicatorVector indicator_from_json(const Json& j) {
    auto rat = [&](const char* k) -> std::optional<Rational> {
        if (!j.contains(k) || j[k].is_null()) return std::nullopt;
        if (j[k].is_number_integer()) return Rational(j[k].get<std::int64_t>());
        if (j[k].is_string()) return Rational::parse(j[k].get<std::string>());
        throw DecodeError(std::string("indicator field '") + k + "' must be an integer or a string");
    };
    IndicatorVector v;
    v.account = AccountId(j.at("account").get<std::string>());
    v.swap_count = j.value("swap_count", std::size_t{1});
    v.i1 = rat("i1");
    v.i2 = rat("i2");
    if (j.contains("i3") && j["i3"].is_string() && j["i3"].get<std::string>() == "inf")
        v.i3_infinite = true;
    else
        v.i3 = rat("i3");
    if (!v.i3 && !v.i3_infinite && v.i2) {
        if (v.i1 && *v.i1 > Rational(0))
            v.i3 = *v.i2 / *v.i1;
        else
            v.i3_infinite = true;
    }
    v.i4 = rat("i4").value_or(Rational(0));
    v.i5 = j.value("i5", false);
    v.i6 = rat("i6").value_or(Rational(0));
    v.i7 = j.value("i7", false);
    v.gap_variance = rat("gap_variance").value_or(Rational(0));
    return v;
}

namespace {

Rational central(std::vector<std::uint64_t> xs, bool median) {
    if (!median) {
        i128 sum = 0;
        for (auto x : xs) sum += x;
        return Rational(sum, static_cast<i128>(xs.size()));
    }
    std::sort(xs.begin(), xs.end());
    std::size_t n = xs.size();
    if (n % 2) return Rational::from_i128(xs[n / 2]);
    return Rational(static_cast<i128>(xs[n / 2 - 1]) + xs[n / 2], 2);
}

}  // namespace

std::optional<IndicatorVector> compute_indicators(const AccountId& account, const std::vector<RiskyWithdrawal>& risky,
                                                  const IndicatorOptions& opts) {
    IndicatorVector v;
    v.account = account;
    std::vector<std::uint64_t> g1, g2, all;
    std::size_t probed = 0, p12 = 0;
    bool any_deposit = false;
    for (const auto& r : risky) {
        if (r.account != account) continue;
        ++v.swap_count;
        if (r.probed) ++probed;
        if (r.deposit_in_tx) any_deposit = true;
        if (r.competitors > 0) v.i7 = true;
        bool is_p2 = r.pattern == DepositPattern::P2_Interest;
        if (is_p2 || r.pattern == DepositPattern::P1_NonStandardBalance) ++p12;
        if (r.block_gap) {
            (is_p2 ? g2 : g1).push_back(*r.block_gap);
            all.push_back(*r.block_gap);
        }
    }
    if (v.swap_count == 0) return std::nullopt;
    if (!g1.empty()) v.i1 = central(g1, opts.use_median);
    if (!g2.empty()) v.i2 = central(g2, opts.use_median);
    if (v.i2) {
        if (v.i1 && *v.i1 > Rational(0))
            v.i3 = *v.i2 / *v.i1;
        else
            v.i3_infinite = true;
    }
    const i128 n = static_cast<i128>(v.swap_count);
    v.i4 = Rational(static_cast<i128>(probed), n);
    v.i5 = !any_deposit;
    v.i6 = Rational(static_cast<i128>(p12), n);
    if (!all.empty()) {
        Rational mean = central(all, false);
        Rational acc;
        for (auto x : all) {
            Rational d = Rational::from_i128(x) - mean;
            acc += d * d;
        }
        v.gap_variance = acc / Rational::from_i128(static_cast<i128>(all.size()));
    }
    return v;
}

std::vector<IndicatorVector> compute_all(const std::vector<RiskyWithdrawal>& risky, const IndicatorOptions& opts) {
    std::map<AccountId, std::vector<RiskyWithdrawal>> by_account;
    for (const auto& r : risky) by_account[r.account].push_back(r);
    std::vector<IndicatorVector> out;
    for (const auto& [acct, rs] : by_account)
        if (auto v = compute_indicators(acct, rs, opts)) out.push_back(std::move(*v));
    return out;
}

std::string to_string(AccountLabelKind k) {
    switch (k) {
        case AccountLabelKind::Attacker_A1: return "Attacker_A1";
        case AccountLabelKind::Attacker_A2: return "Attacker_A2";
        case AccountLabelKind::Attacker_Generic: return "Attacker_Generic";
        case AccountLabelKind::ScavengerA3: return "ScavengerA3";
        case AccountLabelKind::Benign: return "Benign";
    }
    return "?";
}

AccountLabel classify_account(const IndicatorVector& v, const DetectionParams& p) {
    AccountLabel out;
    bool finite_i3 = false;
    if (p.x1 && v.i1 && *v.i1 <= *p.x1) out.fired.insert("I1");
    if (p.x2 && v.i2 && *v.i2 >= *p.x2) out.fired.insert("I2");
    if (p.x3 && (v.i3_infinite || (v.i3 && *v.i3 >= *p.x3))) {
        out.fired.insert("I3");
        finite_i3 = !v.i3_infinite;
    }
    if (p.x4 && v.swap_count > 0 && v.i4 >= *p.x4) out.fired.insert("I4");
    if (p.x6 && v.swap_count > 0 && v.i6 >= *p.x6) out.fired.insert("I6");

    if (!out.fired.empty()) {
        if (out.fired.count("I1") || finite_i3)
            out.kind = AccountLabelKind::Attacker_A1;
        else if (out.fired.count("I4"))
            out.kind = AccountLabelKind::Attacker_A2;
        else
            out.kind = AccountLabelKind::Attacker_Generic;
    } else if (v.gap_variance > p.scavenger_spread * p.scavenger_spread) {
        out.kind = AccountLabelKind::ScavengerA3;
    }
    return out;
}

DetectionParams calibrate(const std::vector<std::pair<IndicatorVector, bool>>& labeled) {
    std::vector<const IndicatorVector*> pos;
    for (const auto& [v, yes] : labeled)
        if (yes) pos.push_back(&v);
    if (pos.empty()) throw NoPositives();

    DetectionParams out;
    out.x1 = out.x2 = out.x3 = out.x4 = out.x6 = std::nullopt;
    std::vector<const IndicatorVector*> rest_b, rest_c;

    for (const auto* v : pos) {
        if (v->i1 && v->i2 && *v->i2 > *v->i1) {
            Rational x2 = Rational::from_i128(v->i2->floor());
            if (!out.x2 || x2 < *out.x2) out.x2 = x2;
            if (*v->i1 > Rational(0)) {
                Rational x3 = (*v->i2 / *v->i1).floor_to(100);
                if (!out.x3 || x3 < *out.x3) out.x3 = x3;
            }
        } else {
            rest_b.push_back(v);
        }
    }
    for (const auto* v : rest_b) {
        if (v->i6 > Rational(0)) {
            Rational x6 = v->i6.floor_to(1000);
            if (!out.x6 || x6 < *out.x6) out.x6 = x6;
        } else {
            rest_c.push_back(v);
        }
    }
    for (const auto* v : rest_c) {
        if (v->i1) {
            Rational x1 = Rational::from_i128(v->i1->ceil());
            if (!out.x1 || x1 > *out.x1) out.x1 = x1;
        }
        if (v->i4 > Rational(0)) {
            Rational x4 = v->i4.floor_to(1000);
            if (!out.x4 || x4 < *out.x4) out.x4 = x4;
        }
        if (!v->i1 && !(v->i4 > Rational(0))) throw UncoverablePositive(v->account.str());
    }
    return out;
}

std::string indicators_csv(const std::vector<IndicatorVector>& vectors, const DetectionParams& params) {
    auto opt = [](const std::optional<Rational>& r) { return r ? r->to_decimal(4) : std::string{}; };
    std::ostringstream os;
    os << "account,swap_count,i1,i2,i3,i4,i5,i6,i7,gap_stddev,label,fired\n";
    for (const auto& v : vectors) {
        AccountLabel l = classify_account(v, params);
        std::string fired;
        for (const auto& f : l.fired) fired += (fired.empty() ? "" : "|") + f;
        Rational sd = Rational::from_i128(static_cast<i128>(std::llround(v.gap_stddev() * 10000)));
        os << v.account.str() << ',' << v.swap_count << ',' << opt(v.i1) << ',' << opt(v.i2) << ','
           << (v.i3_infinite ? std::string("inf") : opt(v.i3)) << ',' << v.i4.to_decimal(4) << ','
           << (v.i5 ? "true" : "false") << ',' << v.i6.to_decimal(4) << ',' << (v.i7 ? "true" : "false") << ','
           << (sd / Rational(10000)).to_decimal(4) << ',' << to_string(l.kind) << ',' << fired << '\n';
    }
    return os.str();
}

}  // namespace atomscan
