#include "atomscan/crosschain.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include "atomscan/matchmaker.hpp"

namespace atomscan {

namespace {

template <typename T>
T require(const std::optional<T>& v, const CallRecord& r, const char* arg) {
    if (!v) throw DecodeError(r.callee_func + " in " + r.txid + ": missing argument '" + arg + "'");
    return *v;
}

std::int64_t require_time(const CallRecord& r) {
    auto it = r.args.find("timestamp");
    if (it == r.args.end()) throw DecodeError(r.callee_func + " in " + r.txid + ": missing argument 'timestamp'");
    if (auto* u = std::get_if<std::uint64_t>(&it->second)) return static_cast<std::int64_t>(*u);
    if (auto* s = std::get_if<std::int64_t>(&it->second)) return *s;
    throw DecodeError(r.callee_func + " in " + r.txid + ": timestamp must be an integer");
}

}  // namespace

std::vector<XTransferRecord> extract_xtransfers(const std::vector<CallRecord>& stream) {
    std::vector<XTransferRecord> out;
    for (const auto& r : stream) {
        if (!r.success || r.callee_func != "xTransfer") continue;
        XTransferRecord x;
        x.sender = r.caller;
        x.amount = require(r.arg_amount("amount"), r, "amount");
        if (x.amount == 0) throw DecodeError("xTransfer in " + r.txid + ": zero amount");
        x.target = require(r.arg_account("to"), r, "to");
        x.txid = r.txid;
        x.chain = r.chain;
        x.block = r.block;
        x.timestamp = require_time(r);
        out.push_back(std::move(x));
    }
    return out;
}

std::vector<ReportRecord> extract_reports(const std::vector<CallRecord>& stream) {
    std::vector<ReportRecord> out;
    for (const auto& r : stream) {
        if (!r.success || r.callee_func != "reportTx") continue;
        ReportRecord p;
        p.reporter = r.caller;
        p.reported_txid = require(r.arg_string("_txId"), r, "_txId");
        if (p.reported_txid.empty()) throw DecodeError("reportTx in " + r.txid + ": empty _txId");
        p.target = require(r.arg_account("to"), r, "to");
        p.amount = require(r.arg_amount("amount"), r, "amount");
        p.txid = r.txid;
        p.chain = r.chain;
        p.timestamp = require_time(r);
        out.push_back(std::move(p));
    }
    return out;
}

CrossChainResult join_crosschain(const std::vector<XTransferRecord>& src, const std::vector<ReportRecord>& dst,
                                 const CrossChainOptions& opts) {
    std::map<std::string, std::size_t> by_txid;
    std::vector<CrossChainGroup> groups(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) {
        groups[i].src = src[i];
        by_txid.emplace(src[i].txid, i);  // first xTransfer wins on duplicate ids
    }
    CrossChainResult out;
    std::vector<std::set<AccountId>> reporters(src.size());
    for (const auto& r : dst) {
        auto it = by_txid.find(r.reported_txid);
        if (it == by_txid.end()) {
            out.orphans.push_back(r);
            continue;
        }
        CrossChainGroup& g = groups[it->second];
        bool amount_ok = opts.amount_tolerance_pct == Rational(0)
                             ? r.amount == g.src.amount
                             : within_tolerance(r.amount, g.src.amount, opts.amount_tolerance_pct);
        if (!amount_ok || r.target != g.src.target) {
            out.orphans.push_back(r);
            continue;
        }
        g.reports.push_back(r);
        g.delays.push_back(r.timestamp - g.src.timestamp);
        reporters[it->second].insert(r.reporter);
    }
    for (std::size_t i = 0; i < groups.size(); ++i) {
        groups[i].distinct_reporters = reporters[i].size();
        groups[i].minted = reporters[i].size() >= opts.quorum;
        (groups[i].minted ? out.matched : out.underwater).push_back(std::move(groups[i]));
    }
    return out;
}

Rational DelayHistogram::fraction_under(std::int64_t minutes) const {
    if (total == 0) return Rational(0);
    std::size_t n = 0;
    for (const auto& b : buckets)
        if (b.hi_min && *b.hi_min <= minutes) n += b.count;
    return Rational(static_cast<i128>(n), static_cast<i128>(total));
}

DelayHistogram delay_stats(const CrossChainResult& result, const std::vector<std::int64_t>& edges) {
    if (edges.empty() || !std::is_sorted(edges.begin(), edges.end()) ||
        std::adjacent_find(edges.begin(), edges.end()) != edges.end())
        throw std::invalid_argument("delay edges must be strictly increasing");
    DelayHistogram h;
    for (std::size_t i = 0; i < edges.size(); ++i) {
        DelayBucket b;
        b.lo_min = edges[i];
        if (i + 1 < edges.size()) b.hi_min = edges[i + 1];
        b.label = "[" + std::to_string(b.lo_min) + "," + (b.hi_min ? std::to_string(*b.hi_min) : "inf") + ")";
        h.buckets.push_back(std::move(b));
    }
    auto visit = [&](const CrossChainGroup& g) {
        for (std::size_t k = 0; k < g.reports.size(); ++k) {
            std::int64_t d = g.delays[k];
            if (d < 0) {
                h.negative.push_back(g.reports[k].txid);
                continue;
            }
            if (!h.max_delay || d > *h.max_delay) h.max_delay = d;
            if (d < edges.front() * 60) continue;
            // Last bucket whose lower edge is <= d.
            std::size_t idx = 0;
            while (idx + 1 < edges.size() && edges[idx + 1] * 60 <= d) ++idx;
            ++h.buckets[idx].count;
            ++h.total;
        }
    };
    for (const auto& g : result.matched) visit(g);
    for (const auto& g : result.underwater) visit(g);
    for (auto& b : h.buckets)
        b.fraction = h.total ? Rational(static_cast<i128>(b.count), static_cast<i128>(h.total)) : Rational(0);
    return h;
}

std::string histogram_csv(const DelayHistogram& h) {
    std::ostringstream os;
    os << "bucket,count,fraction\n";
    for (const auto& b : h.buckets) os << '"' << b.label << "\"," << b.count << ',' << b.fraction.to_decimal(6) << '\n';
    return os.str();
}

namespace {

Json group_json(const CrossChainGroup& g) {
    Json reps = Json::array();
    for (std::size_t k = 0; k < g.reports.size(); ++k)
        reps.push_back(Json{{"txid", g.reports[k].txid},
                            {"reporter", g.reports[k].reporter.str()},
                            {"delay_s", g.delays[k]}});
    return Json{{"txid", g.src.txid},       {"sender", g.src.sender.str()},
                {"target", g.src.target.str()}, {"amount", g.src.amount},
                {"distinct_reporters", g.distinct_reporters}, {"minted", g.minted},
                {"reports", reps}};
}

}  // namespace

Json to_json(const CrossChainResult& r) {
    Json m = Json::array(), u = Json::array(), o = Json::array();
    for (const auto& g : r.matched) m.push_back(group_json(g));
    for (const auto& g : r.underwater) u.push_back(group_json(g));
    for (const auto& p : r.orphans)
        o.push_back(Json{{"txid", p.txid}, {"reporter", p.reporter.str()}, {"reported_txid", p.reported_txid}});
    return Json{{"matched_count", r.matched.size()},
                {"underwater_count", r.underwater.size()},
                {"orphan_count", r.orphans.size()},
                {"underwater", u},
                {"orphans", o},
                {"matched", m}};
}

// ---------------------------------------------------------------------------
// Synthetic traffic

namespace {

std::string hex_id(std::mt19937_64& g, int words) {
    std::string s = "0x";
    char buf[17];
    for (int i = 0; i < words; ++i) {
        std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(g()));
        s += buf;
    }
    return s;
}

AccountId synth_account(std::uint32_t tag, std::uint64_t n) {
    char buf[43];
    std::snprintf(buf, sizeof buf, "0x%08x%016llx%016llx", tag, 0ULL, static_cast<unsigned long long>(n));
    return AccountId(buf);
}

}  // namespace

BancorSynth synth_bancorx(const BancorSynthConfig& cfg) {
    const auto& edges = default_delay_edges();
    if (cfg.bucket_weights.size() != edges.size()) throw std::invalid_argument("one weight per delay bucket expected");
    if (cfg.underwater > cfg.swaps) throw std::invalid_argument("more underwater swaps than swaps");
    if (cfg.reporters < 3) throw std::invalid_argument("at least three reporters expected");
    if (cfg.bucket_weights.back() != 0)
        throw std::invalid_argument("open-ended bucket cannot be sampled");

    std::mt19937_64 g(cfg.seed * 0x9e3779b97f4a7c15ULL + 17);
    const std::size_t full = cfg.reporters;
    const std::size_t total = (cfg.swaps - cfg.underwater) * full + cfg.underwater * (full - 1);

    // Largest-remainder quotas.
    std::uint64_t wsum = 0;
    for (auto w : cfg.bucket_weights) wsum += w;
    if (wsum == 0) throw std::invalid_argument("bucket weights sum to zero");
    std::vector<std::size_t> quota(edges.size());
    std::vector<std::pair<std::uint64_t, std::size_t>> rema;
    std::size_t assigned = 0;
    for (std::size_t b = 0; b < edges.size(); ++b) {
        u128 num = static_cast<u128>(cfg.bucket_weights[b]) * total;
        quota[b] = static_cast<std::size_t>(num / wsum);
        assigned += quota[b];
        rema.emplace_back(static_cast<std::uint64_t>(num % wsum), b);
    }
    std::stable_sort(rema.begin(), rema.end(), [](auto& a, auto& b) { return a.first > b.first; });
    for (std::size_t k = 0; assigned < total; ++k, ++assigned) ++quota[rema[k % rema.size()].second];

    std::vector<std::size_t> slots;
    for (std::size_t b = 0; b < quota.size(); ++b) slots.insert(slots.end(), quota[b], b);
    std::shuffle(slots.begin(), slots.end(), g);

    // Reports of underwater swaps are early ones (below five minutes).
    std::size_t need = cfg.underwater * (full - 1);
    std::vector<std::size_t> early, rest;
    for (auto b : slots) {
        if (early.size() < need && edges[b + 1] <= 5)
            early.push_back(b);
        else
            rest.push_back(b);
    }
    if (early.size() < need) throw std::invalid_argument("not enough early delay slots for underwater swaps");

    std::size_t under10 = 0;
    for (std::size_t b = 0; b < quota.size(); ++b)
        if (b + 1 < edges.size() && edges[b + 1] <= 10) under10 += quota[b];

    BancorSynth out;
    out.configured_under_10 = Rational(static_cast<i128>(under10), static_cast<i128>(total));

    AccountId eth_contract = synth_account(0xBA, 1), eos_contract = synth_account(0xBA, 2);
    std::vector<AccountId> reporters;
    for (std::size_t r = 0; r < cfg.reporters; ++r) reporters.push_back(synth_account(0xBB, r));

    // Underwater swaps spread evenly through the sequence.
    std::set<std::size_t> under_idx;
    for (std::size_t k = 0; k < cfg.underwater; ++k) under_idx.insert((k * 2 + 1) * cfg.swaps / (2 * cfg.underwater));

    const std::int64_t base = 1'550'000'000;
    std::size_t next_rest = 0, next_early = 0;
    struct Pending {
        std::int64_t ts;
        CallRecord rec;
    };
    std::vector<Pending> reports;
    for (std::size_t i = 0; i < cfg.swaps; ++i) {
        std::int64_t t0 = base + static_cast<std::int64_t>(i) * 60;
        CallRecord x;
        x.txid = hex_id(g, 4);
        x.block = 7'000'000 + i * 4;
        x.tx_index = 0;
        x.chain = ChainId{"eth"};
        x.caller = synth_account(0xBC, i % 97);
        x.callee_contract = eth_contract;
        x.callee_func = "xTransfer";
        x.call_seq = CallSeq::parse("0");
        Amount amount = 1'000'000 + (g() % 1'000'000'000);
        AccountId target = synth_account(0xBD, i % 89);
        x.args = {{"amount", amount}, {"to", target.str()}, {"timestamp", static_cast<std::uint64_t>(t0)}};
        x.gas = 90000;
        x.gas_price = 10;
        out.source.push_back(x);

        bool short_of_quorum = under_idx.count(i) > 0;
        std::size_t n = short_of_quorum ? full - 1 : full;
        for (std::size_t r = 0; r < n; ++r) {
            std::size_t b = short_of_quorum ? early[next_early++] : rest[next_rest++];
            std::int64_t lo = edges[b] * 60;
            std::int64_t hi = edges[b + 1] * 60;
            std::int64_t delay = lo + static_cast<std::int64_t>(g() % static_cast<std::uint64_t>(hi - lo));
            CallRecord p;
            p.txid = hex_id(g, 4);
            p.chain = ChainId{"eos"};
            p.caller = reporters[r];
            p.callee_contract = eos_contract;
            p.callee_func = "reportTx";
            p.call_seq = CallSeq::parse("0");
            p.args = {{"_txId", x.txid},
                      {"to", target.str()},
                      {"amount", amount},
                      {"timestamp", static_cast<std::uint64_t>(t0 + delay)}};
            p.gas = 50000;
            reports.push_back({t0 + delay, std::move(p)});
        }
    }
    std::stable_sort(reports.begin(), reports.end(), [](const Pending& a, const Pending& b) { return a.ts < b.ts; });
    std::uint64_t last_block = ~std::uint64_t{0};
    std::uint32_t idx = 0;
    for (auto& p : reports) {
        std::uint64_t blk = static_cast<std::uint64_t>((p.ts - base) * 2);  // half-second blocks
        idx = blk == last_block ? idx + 1 : 0;
        last_block = blk;
        p.rec.block = blk;
        p.rec.tx_index = idx;
        out.destination.push_back(std::move(p.rec));
    }
    return out;
}

}  // namespace atomscan
