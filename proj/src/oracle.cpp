#include "atomscan/oracle.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <map>
#include <set>

namespace atomscan {

namespace {

struct Group {
    std::uint32_t mask = 0;
    bool intra = false;
    bool mismatch = false;
    int atomic_records = 0;
};

struct Problem {
    const std::vector<DepositRecord>& D;
    const std::vector<WithdrawalRecord>& W;
    const MatchParams& params;
    std::size_t nd = 0, n = 0;
    std::vector<std::uint64_t> pos;       // stream rank per record
    std::vector<std::uint32_t> tx;        // transaction ordinal per record
    std::vector<std::vector<Group>> by_low;  // groups keyed by their lowest record
    std::uint32_t full = 0;

    bool is_dep(std::size_t r) const { return r < nd; }
    const AccountId& account(std::size_t r) const { return is_dep(r) ? D[r].depositor : W[r - nd].withdrawer; }
    std::uint64_t block(std::size_t r) const { return is_dep(r) ? D[r].block : W[r - nd].block; }
    i128 value(std::size_t r) const { return is_dep(r) ? D[r].value : W[r - nd].expected_value_in; }
    const AccountId* token(std::size_t r) const {
        if (is_dep(r)) return &D[r].token;
        const auto& w = W[r - nd];
        return w.origin_func == WithdrawalOrigin::Mint ? nullptr : &w.token_in;
    }
};

bool tokens_ok(const Problem& p, const std::vector<std::size_t>& recs) {
    std::vector<const AccountId*> wt;
    for (auto r : recs)
        if (!p.is_dep(r)) wt.push_back(p.token(r));
    std::size_t any = static_cast<std::size_t>(std::count(wt.begin(), wt.end(), nullptr));
    if (any == wt.size()) return true;
    if (any != 0) return false;
    for (auto r : recs)
        if (*p.token(r) != *wt.front()) return false;
    return true;
}

void combos(std::size_t n, std::size_t k, std::vector<std::size_t>& cur, std::size_t start,
            const std::function<void(const std::vector<std::size_t>&)>& fn) {
    if (cur.size() == k) {
        fn(cur);
        return;
    }
    for (std::size_t i = start; i < n; ++i) {
        cur.push_back(i);
        combos(n, k, cur, i + 1, fn);
        cur.pop_back();
    }
}

// True when some deposits and withdrawals of transaction `t` taken from the
// candidate group match each other within tolerance.
bool settles_within_tx(const Problem& p, const std::vector<std::size_t>& ds, const std::vector<std::size_t>& ws,
                       std::uint32_t t) {
    std::vector<std::size_t> td, tw;
    for (auto d : ds)
        if (p.tx[d] == t) td.push_back(d);
    for (auto w : ws)
        if (p.tx[w] == t) tw.push_back(w);
    const std::size_t m = static_cast<std::size_t>(p.params.max_group);
    for (std::uint32_t dm = 1; dm < (1u << td.size()); ++dm) {
        if (static_cast<std::size_t>(__builtin_popcount(dm)) > m) continue;
        for (std::uint32_t wm = 1; wm < (1u << tw.size()); ++wm) {
            if (static_cast<std::size_t>(__builtin_popcount(wm)) > m) continue;
            i128 a = 0, b = 0;
            std::vector<std::size_t> all;
            for (std::size_t k = 0; k < td.size(); ++k)
                if (dm >> k & 1u) {
                    a += p.value(td[k]);
                    all.push_back(td[k]);
                }
            for (std::size_t k = 0; k < tw.size(); ++k)
                if (wm >> k & 1u) {
                    b += p.value(tw[k]);
                    all.push_back(tw[k]);
                }
            if (within_tolerance(a, b, p.params.tolerance_pct) && tokens_ok(p, all)) return true;
        }
    }
    return false;
}

void build_groups(Problem& p) {
    const std::size_t m = static_cast<std::size_t>(p.params.max_group);
    const std::size_t nw = p.n - p.nd;
    p.by_low.assign(p.n, {});
    for (std::size_t sd = 1; sd <= std::min(m, p.nd); ++sd) {
        std::vector<std::size_t> dc;
        combos(p.nd, sd, dc, 0, [&](const std::vector<std::size_t>& ds) {
            for (std::size_t sw = 1; sw <= std::min(m, nw); ++sw) {
                std::vector<std::size_t> wc;
                combos(nw, sw, wc, 0, [&](const std::vector<std::size_t>& ws0) {
                    std::vector<std::size_t> ws;
                    for (auto w : ws0) ws.push_back(w + p.nd);
                    i128 sd_sum = 0, sw_sum = 0;
                    for (auto r : ds) sd_sum += p.value(r);
                    for (auto r : ws) sw_sum += p.value(r);
                    if (!within_tolerance(sd_sum, sw_sum, p.params.tolerance_pct)) return;
                    std::vector<std::size_t> all(ds);
                    all.insert(all.end(), ws.begin(), ws.end());
                    if (!tokens_ok(p, all)) return;
                    Group g;
                    for (auto r : all) g.mask |= 1u << r;
                    bool same_tx = std::all_of(all.begin(), all.end(), [&](auto r) { return p.tx[r] == p.tx[all[0]]; });
                    if (same_tx) {
                        g.intra = true;
                        g.atomic_records = static_cast<int>(all.size());
                    } else {
                        // A transaction's records that can settle among
                        // themselves never join a cross-transaction group.
                        for (auto d : ds)
                            for (auto w : ws)
                                if (p.tx[d] == p.tx[w] && settles_within_tx(p, ds, ws, p.tx[d])) return;
                        auto linked = [&](std::size_t d, std::size_t w) { return p.pos[d] < p.pos[w] || p.tx[d] == p.tx[w]; };
                        for (auto w : ws)
                            if (std::none_of(ds.begin(), ds.end(), [&](auto d) { return linked(d, w); })) return;
                        for (auto d : ds)
                            if (std::none_of(ws.begin(), ws.end(), [&](auto w) { return linked(d, w); })) return;
                        std::uint64_t dmin = std::numeric_limits<std::uint64_t>::max(), wmax = 0;
                        for (auto r : ds) dmin = std::min(dmin, p.block(r));
                        for (auto r : ws) wmax = std::max(wmax, p.block(r));
                        if (wmax > dmin && wmax - dmin > p.params.timeout_blocks) return;
                        bool one = std::all_of(all.begin(), all.end(), [&](auto r) { return p.account(r) == p.account(all[0]); });
                        g.mismatch = !one;
                        g.atomic_records = one ? static_cast<int>(all.size()) : 0;
                    }
                    std::size_t low = static_cast<std::size_t>(__builtin_ctz(g.mask));
                    p.by_low[low].push_back(g);
                });
            }
        });
    }
}

// Kuhn's augmenting paths on the small residual graph.
std::size_t max_pairs(const std::vector<std::vector<std::size_t>>& adj, std::size_t right) {
    std::vector<int> match_r(right, -1);
    std::size_t result = 0;
    for (std::size_t u = 0; u < adj.size(); ++u) {
        std::vector<bool> seen(right, false);
        std::function<bool(std::size_t)> augment = [&](std::size_t x) {
            for (auto y : adj[x]) {
                if (seen[y]) continue;
                seen[y] = true;
                if (match_r[y] < 0 || augment(static_cast<std::size_t>(match_r[y]))) {
                    match_r[y] = static_cast<int>(x);
                    return true;
                }
            }
            return false;
        };
        if (augment(u)) ++result;
    }
    return result;
}

// A deposit outside `group` and `exempt` that closes the matching window
// of an earlier deposit: its transaction's remaining records net to a
// deposit, and it is not in the withdrawal's transaction.
bool blocks(const Problem& p, std::size_t d, std::size_t w, std::uint32_t group, std::uint32_t exempt) {
    if (!p.is_dep(d) || (group >> d & 1u) || (exempt >> d & 1u) || p.tx[d] == p.tx[w]) return false;
    i128 net = 0;
    for (std::size_t r = 0; r < p.n; ++r)
        if (p.tx[r] == p.tx[d] && !(exempt >> r & 1u)) net += p.is_dep(r) ? p.value(r) : -p.value(r);
    return net > 0;
}

// Records of a group are netted per transaction into units, as the greedy
// matcher does with a transaction's leftovers. Every deposit-side unit must
// precede every withdrawal-side unit with no blocking deposit in between.
bool in_window(const Problem& p, std::uint32_t group, std::uint32_t exempt) {
    struct TxUnit {
        i128 net = 0;
        std::uint64_t first = std::numeric_limits<std::uint64_t>::max();
        std::uint64_t last_dep = 0;
        bool has_dep = false;
        std::size_t any = 0;
    };
    std::map<std::uint32_t, TxUnit> units;
    for (std::size_t r = 0; r < p.n; ++r) {
        if (!(group >> r & 1u)) continue;
        TxUnit& u = units[p.tx[r]];
        u.net += p.is_dep(r) ? p.value(r) : -p.value(r);
        u.first = std::min(u.first, p.pos[r]);
        if (p.is_dep(r)) {
            u.has_dep = true;
            u.last_dep = std::max(u.last_dep, p.pos[r]);
        }
        u.any = r;
    }
    for (const auto& [td, du] : units) {
        if (du.net <= 0 || !du.has_dep) continue;
        for (const auto& [tw, wu] : units) {
            if (wu.net > 0 || tw == td) continue;
            if (wu.first < du.first) return false;
            for (std::size_t x = 0; x < p.nd; ++x)
                if (p.pos[x] > du.last_dep && p.pos[x] < wu.first && blocks(p, x, wu.any, group, exempt)) return false;
        }
    }
    return true;
}

std::size_t residual_cost(const Problem& p, std::uint32_t leftover) {
    // Grouped deposits no longer close a residual pair's window.
    const std::uint32_t settled = p.full & ~leftover;
    std::size_t cost = 0;
    std::uint32_t consumed = 0;
    std::map<std::uint32_t, std::pair<std::uint32_t, std::uint32_t>> per_tx;  // tx -> (deposit mask, withdrawal mask)
    for (std::size_t r = 0; r < p.n; ++r) {
        if (!(leftover >> r & 1u)) continue;
        auto& e = per_tx[p.tx[r]];
        (p.is_dep(r) ? e.first : e.second) |= 1u << r;
    }
    for (const auto& [t, e] : per_tx) {
        if (!e.first || !e.second) continue;
        i128 sd = 0, sw = 0;
        for (std::size_t r = 0; r < p.n; ++r) {
            if (e.first >> r & 1u) sd += p.value(r);
            if (e.second >> r & 1u) sw += p.value(r);
        }
        if (sd != sw) ++cost;
        consumed |= e.first | e.second;
    }
    std::uint32_t plain = leftover & ~consumed;
    std::vector<std::size_t> pd, pw;
    for (std::size_t r = 0; r < p.n; ++r)
        if (plain >> r & 1u) (p.is_dep(r) ? pd : pw).push_back(r);
    std::vector<std::vector<std::size_t>> adj(pd.size());
    for (std::size_t i = 0; i < pd.size(); ++i) {
        for (std::size_t j = 0; j < pw.size(); ++j) {
            std::size_t d = pd[i], w = pw[j];
            if (p.pos[d] > p.pos[w] || p.account(d) != p.account(w)) continue;
            if (p.block(w) - p.block(d) > p.params.timeout_blocks) continue;
            if (p.value(d) == p.value(w)) continue;
            if (!in_window(p, (1u << d) | (1u << w), settled)) continue;
            const AccountId* wt = p.token(w);
            if (wt && *wt != *p.token(d)) continue;
            adj[i].push_back(j);
        }
    }
    return cost + pd.size() + pw.size() - max_pairs(adj, pw.size());
}

}  // namespace

OracleResult exhaustive_match(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W,
                              const MatchParams& params) {
    params.validate();
    if (D.size() > kOracleMaxSide || W.size() > kOracleMaxSide)
        throw WindowTooLarge("oracle window holds " + std::to_string(D.size()) + " deposits and " +
                             std::to_string(W.size()) + " withdrawals; limit is " + std::to_string(kOracleMaxSide));
    Problem p{D, W, params, 0, 0, {}, {}, {}, 0};
    p.nd = D.size();
    p.n = D.size() + W.size();
    p.full = p.n == 32 ? ~0u : ((1u << p.n) - 1);

    // Stream ranks and transaction ordinals.
    std::vector<std::pair<StreamKey, std::size_t>> keys;
    for (std::size_t i = 0; i < D.size(); ++i) keys.emplace_back(D[i].key(), i);
    for (std::size_t i = 0; i < W.size(); ++i) keys.emplace_back(W[i].key(), p.nd + i);
    std::stable_sort(keys.begin(), keys.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
    p.pos.assign(p.n, 0);
    for (std::size_t k = 0; k < keys.size(); ++k) p.pos[keys[k].second] = k;
    std::map<std::string, std::uint32_t> tx_ids;
    p.tx.assign(p.n, 0);
    for (std::size_t r = 0; r < p.n; ++r) {
        const std::string& t = p.is_dep(r) ? D[r].txid : W[r - p.nd].txid;
        auto it = tx_ids.emplace(t, static_cast<std::uint32_t>(tx_ids.size())).first;
        p.tx[r] = it->second;
    }
    build_groups(p);

    // Position bitmask of a record set, earliest record most significant.
    auto pos_bits = [&](std::uint32_t mask) {
        std::uint64_t bits = 0;
        for (std::size_t r = 0; r < p.n; ++r)
            if (mask >> r & 1u) bits |= std::uint64_t{1} << (63 - p.pos[r]);
        return bits;
    };

    OracleResult res;
    std::size_t best_cost = std::numeric_limits<std::size_t>::max();
    int best_matched = -1;
    std::uint64_t best_bits = 0;
    std::vector<const Group*> family, best_family;

    std::function<void(std::uint32_t, std::uint32_t, std::size_t, int)> rec =
        [&](std::uint32_t decided, std::uint32_t grouped, std::size_t cost, int matched) {
            ++res.explored;
            if (cost > best_cost) return;
            std::uint32_t open = p.full & ~decided;
            if (open == 0) {
                std::uint32_t intra = 0;
                for (const Group* g : family)
                    if (g->intra) intra |= g->mask;
                for (const Group* g : family)
                    if (!g->intra && !in_window(p, g->mask, intra)) return;
                std::size_t total = cost + residual_cost(p, p.full & ~grouped);
                std::uint64_t bits = pos_bits(grouped);
                bool better = total < best_cost || (total == best_cost && matched > best_matched) ||
                              (total == best_cost && matched == best_matched && bits > best_bits);
                if (better) {
                    best_cost = total;
                    best_matched = matched;
                    best_bits = bits;
                    best_family = family;
                }
                return;
            }
            std::size_t low = static_cast<std::size_t>(__builtin_ctz(open));
            for (const Group& g : p.by_low[low]) {
                if (g.mask & decided) continue;
                family.push_back(&g);
                rec(decided | g.mask, grouped | g.mask, cost + (g.mismatch ? 1 : 0), matched + g.atomic_records);
                family.pop_back();
            }
            rec(decided | (1u << low), grouped, cost, matched);
        };
    rec(0, 0, 0, 0);

    res.min_violation_count = best_cost;
    for (const Group* g : best_family) {
        OracleGroup og;
        og.intra_tx = g->intra;
        og.account_mismatch = g->mismatch;
        for (std::size_t r = 0; r < p.n; ++r) {
            if (!(g->mask >> r & 1u)) continue;
            if (p.is_dep(r))
                og.deposits.push_back(D[r]);
            else
                og.withdrawals.push_back(W[r - p.nd]);
        }
        res.best_matching.push_back(std::move(og));
    }
    std::sort(res.best_matching.begin(), res.best_matching.end(), [](const OracleGroup& a, const OracleGroup& b) {
        auto ka = a.deposits.empty() ? a.withdrawals.front().key() : a.deposits.front().key();
        auto kb = b.deposits.empty() ? b.withdrawals.front().key() : b.deposits.front().key();
        return ka < kb;
    });
    return res;
}

namespace {

std::string group_key(const std::vector<DepositRecord>& ds, const std::vector<WithdrawalRecord>& ws) {
    std::vector<std::string> parts;
    for (const auto& d : ds) parts.push_back("d:" + d.txid + "/" + d.call_seq.to_string());
    for (const auto& w : ws) parts.push_back("w:" + w.txid + "/" + w.call_seq.to_string());
    std::sort(parts.begin(), parts.end());
    std::string out;
    for (const auto& s : parts) out += (out.empty() ? "" : ",") + s;
    return out;
}

}  // namespace

Diff compare_with_oracle(const DetectionReport& greedy, const OracleResult& oracle) {
    Diff diff;
    diff.violation_delta = static_cast<long>(greedy.violations.size()) - static_cast<long>(oracle.min_violation_count);
    std::set<std::string> g, o;
    for (const auto& m : greedy.matches) g.insert(group_key(m.deposits, m.withdrawals));
    for (const auto& og : oracle.best_matching)
        if (!og.account_mismatch) o.insert(group_key(og.deposits, og.withdrawals));
    for (const auto& k : g)
        if (!o.count(k)) diff.mismatched_groups.push_back("greedy-only {" + k + "}");
    for (const auto& k : o)
        if (!g.count(k)) diff.mismatched_groups.push_back("oracle-only {" + k + "}");
    return diff;
}

std::vector<Window> split_windows(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W,
                                  std::size_t max_side) {
    std::vector<Window> out;
    Window cur;
    std::size_t i = 0, j = 0;
    while (i < D.size() || j < W.size()) {
        // Next transaction in stream order.
        bool dep_first = j == W.size() || (i < D.size() && !(W[j].key() < D[i].key()));
        const std::string tx = dep_first ? D[i].txid : W[j].txid;
        Window t;
        while (true) {
            bool take_d = i < D.size() && D[i].txid == tx && (j == W.size() || W[j].txid != tx || !(W[j].key() < D[i].key()));
            bool take_w = !take_d && j < W.size() && W[j].txid == tx;
            if (take_d)
                t.deposits.push_back(D[i++]);
            else if (take_w)
                t.withdrawals.push_back(W[j++]);
            else
                break;
        }
        if (!cur.deposits.empty() || !cur.withdrawals.empty()) {
            if (cur.deposits.size() + t.deposits.size() > max_side ||
                cur.withdrawals.size() + t.withdrawals.size() > max_side) {
                out.push_back(std::move(cur));
                cur = Window{};
            }
        }
        cur.deposits.insert(cur.deposits.end(), t.deposits.begin(), t.deposits.end());
        cur.withdrawals.insert(cur.withdrawals.end(), t.withdrawals.begin(), t.withdrawals.end());
    }
    if (!cur.deposits.empty() || !cur.withdrawals.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace atomscan
