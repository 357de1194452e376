#include "atomscan/matchmaker.hpp"

#include <algorithm>
#include <functional>
#include <limits>
#include <numeric>

namespace atomscan {

void MatchParams::validate() const {
    if (tolerance_pct < Rational(0) || !(tolerance_pct < Rational(100)))
        throw std::invalid_argument("tolerance_pct must be in [0, 100)");
    if (max_group < 1) throw std::invalid_argument("max_group must be >= 1");
}

std::string to_string(MatchKind k) { return k == MatchKind::AtomicSwap ? "AtomicSwap" : "AtomicAddLiquidity"; }

namespace {

// 128x128 -> 256 bit unsigned product, for exact fraction comparison.
struct Wide {
    u128 hi = 0;
    u128 lo = 0;
    auto operator<=>(const Wide&) const = default;
};

Wide wide_mul(u128 a, u128 b) {
    const u128 mask = (static_cast<u128>(1) << 64) - 1;
    u128 a0 = a & mask, a1 = a >> 64, b0 = b & mask, b1 = b >> 64;
    u128 p00 = a0 * b0, p01 = a0 * b1, p10 = a1 * b0, p11 = a1 * b1;
    u128 mid = (p00 >> 64) + (p01 & mask) + (p10 & mask);
    Wide w;
    w.lo = (p00 & mask) | (mid << 64);
    w.hi = p11 + (p01 >> 64) + (p10 >> 64) + (mid >> 64);
    return w;
}

i128 abs128(i128 v) { return v < 0 ? -v : v; }

// Relative gap |a-b| / max(a,b,1) kept as an exact fraction.
struct Gap {
    u128 num = 0;
    u128 den = 1;
    bool operator<(const Gap& o) const { return wide_mul(num, o.den) < wide_mul(o.num, den); }
};

Gap rel_gap(i128 a, i128 b) {
    i128 hi = std::max({a, b, static_cast<i128>(1)});
    return Gap{static_cast<u128>(abs128(a - b)), static_cast<u128>(hi)};
}

bool gap_ok(const Gap& g, const Rational& tol) {
    // g <= tol / 100
    return wide_mul(g.num * 100, static_cast<u128>(tol.den())) <= wide_mul(static_cast<u128>(tol.num()), g.den);
}

// Calls fn(combo) for every k-subset of [0, n) in lexicographic order.
// fn returns false to stop early.
bool for_each_combo(std::size_t n, std::size_t k, const std::function<bool(const std::vector<std::uint32_t>&)>& fn) {
    if (k == 0 || k > n) return true;
    std::vector<std::uint32_t> c(k);
    std::iota(c.begin(), c.end(), 0u);
    while (true) {
        if (!fn(c)) return false;
        std::size_t i = k;
        while (i > 0 && c[i - 1] == n - k + i - 1) --i;
        if (i == 0) return true;
        ++c[i - 1];
        for (std::size_t j = i; j < k; ++j) c[j] = c[j - 1] + 1;
    }
}

struct Ctx {
    const std::vector<DepositRecord>& D;
    const std::vector<WithdrawalRecord>& W;
    const MatchParams& params;
};

// Token required by a withdrawal; nullptr means any pool token (mint).
const AccountId* w_token(const WithdrawalRecord& w) {
    return w.origin_func == WithdrawalOrigin::Mint ? nullptr : &w.token_in;
}

const AccountId* unit_token(const Ctx& c, const Unit& u) {
    if (u.deposit_side() && !u.deposits.empty()) return &c.D[u.deposits.front()].token;
    if (!u.withdrawals.empty()) return w_token(c.W[u.withdrawals.front()]);
    return &c.D[u.deposits.front()].token;
}

bool tokens_compatible(const std::vector<const AccountId*>& dep_tokens, const std::vector<const AccountId*>& wd_tokens) {
    std::size_t any = static_cast<std::size_t>(std::count(wd_tokens.begin(), wd_tokens.end(), nullptr));
    if (any == wd_tokens.size()) return true;
    if (any != 0) return false;
    const AccountId& t = *wd_tokens.front();
    for (const auto* w : wd_tokens)
        if (*w != t) return false;
    for (const auto* d : dep_tokens)
        if (d && *d != t) return false;
    return true;
}

void collect_accounts(const Ctx& c, const Unit& u, std::vector<const AccountId*>& out) {
    for (auto i : u.deposits) out.push_back(&c.D[i].depositor);
    for (auto i : u.withdrawals) out.push_back(&c.W[i].withdrawer);
}

bool single_account(const std::vector<const AccountId*>& accts) {
    for (const auto* a : accts)
        if (*a != *accts.front()) return false;
    return true;
}

struct Positions {
    std::vector<std::uint64_t> dpos;
    std::vector<std::uint64_t> wpos;
    // merged stream: (is_deposit, index)
    std::vector<std::pair<bool, std::uint32_t>> stream;
};

Positions merge_positions(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W) {
    Positions p;
    p.dpos.resize(D.size());
    p.wpos.resize(W.size());
    p.stream.reserve(D.size() + W.size());
    std::size_t i = 0, j = 0;
    while (i < D.size() || j < W.size()) {
        bool dep = j == W.size() || (i < D.size() && !key_less(W[j], D[i]));
        if (dep) {
            p.dpos[i] = p.stream.size();
            p.stream.emplace_back(true, static_cast<std::uint32_t>(i++));
        } else {
            p.wpos[j] = p.stream.size();
            p.stream.emplace_back(false, static_cast<std::uint32_t>(j++));
        }
    }
    return p;
}

i128 dsum(const Ctx& c, const std::vector<std::uint32_t>& ds) {
    i128 s = 0;
    for (auto i : ds) s += c.D[i].value;
    return s;
}

i128 wsum(const Ctx& c, const std::vector<std::uint32_t>& ws) {
    i128 s = 0;
    for (auto i : ws) s += c.W[i].expected_value_in;
    return s;
}

std::optional<std::uint64_t> block_gap_of(const Ctx& c, const std::vector<std::uint32_t>& ds,
                                          const std::vector<std::uint32_t>& ws) {
    if (ds.empty() || ws.empty()) return std::nullopt;
    std::uint64_t dmin = std::numeric_limits<std::uint64_t>::max(), wmax = 0;
    for (auto i : ds) dmin = std::min(dmin, c.D[i].block);
    for (auto i : ws) wmax = std::max(wmax, c.W[i].block);
    return wmax >= dmin ? wmax - dmin : 0;
}

constexpr std::size_t kIntraWindow = 16;

struct IntraPick {
    std::vector<std::uint32_t> ds;  // positions within the local lists
    std::vector<std::uint32_t> ws;
};

// Best subset pair inside one transaction: smallest relative gap, then
// fewest records, then enumeration order (earliest first).
std::optional<IntraPick> best_intra(const Ctx& c, const std::vector<std::uint32_t>& dl,
                                    const std::vector<std::uint32_t>& wl) {
    const std::size_t m = static_cast<std::size_t>(c.params.max_group);
    const std::size_t nd = std::min(dl.size(), kIntraWindow);
    const std::size_t nw = std::min(wl.size(), kIntraWindow);
    std::optional<IntraPick> best;
    Gap best_gap;
    std::size_t best_size = 0;
    for (std::size_t total = 2; total <= 2 * m; ++total) {
        for (std::size_t sd = 1; sd <= std::min(m, total - 1); ++sd) {
            std::size_t sw = total - sd;
            if (sw > m || sd > nd || sw > nw) continue;
            for_each_combo(nd, sd, [&](const std::vector<std::uint32_t>& dc) {
                i128 ds = 0;
                std::vector<const AccountId*> dtok;
                for (auto k : dc) {
                    ds += c.D[dl[k]].value;
                    dtok.push_back(&c.D[dl[k]].token);
                }
                for_each_combo(nw, sw, [&](const std::vector<std::uint32_t>& wc) {
                    i128 ws = 0;
                    std::vector<const AccountId*> wtok;
                    for (auto k : wc) {
                        ws += c.W[wl[k]].expected_value_in;
                        wtok.push_back(w_token(c.W[wl[k]]));
                    }
                    Gap g = rel_gap(ds, ws);
                    if (!gap_ok(g, c.params.tolerance_pct)) return true;
                    if (!tokens_compatible(dtok, wtok)) return true;
                    if (!best || g < best_gap || (!(best_gap < g) && total < best_size)) {
                        best = IntraPick{dc, wc};
                        best_gap = g;
                        best_size = total;
                    }
                    return true;
                });
                return true;
            });
        }
    }
    return best;
}

// Reorders (position, item) pairs by position in linear time. Positions are
// distinct ranks below `n`.
template <typename T>
std::vector<T> by_position(std::vector<std::pair<std::uint64_t, T>>& items, std::size_t n) {
    constexpr std::uint32_t kNone = std::numeric_limits<std::uint32_t>::max();
    std::vector<std::uint32_t> slot(n, kNone);
    for (std::size_t i = 0; i < items.size(); ++i) slot[items[i].first] = static_cast<std::uint32_t>(i);
    std::vector<T> out;
    out.reserve(items.size());
    for (auto k : slot)
        if (k != kNone) out.push_back(std::move(items[k].second));
    return out;
}

template <typename T>
void erase_positions(std::vector<T>& v, const std::vector<std::uint32_t>& sorted_positions) {
    for (auto it = sorted_positions.rbegin(); it != sorted_positions.rend(); ++it)
        v.erase(v.begin() + static_cast<std::ptrdiff_t>(*it));
}

}  // namespace

bool within_tolerance(i128 a, i128 b, const Rational& tolerance_pct) {
    return gap_ok(rel_gap(abs128(a), abs128(b)), tolerance_pct);
}

// ---------------------------------------------------------------------------
// Stack replay

InterleaveResult check_interleaving(const std::vector<TxEvent>& events, const MatchParams& params) {
    struct Entry {
        std::uint32_t index;
        Amount value;
        bool overtaken;
    };
    const std::size_t m = static_cast<std::size_t>(params.max_group);
    InterleaveResult out;
    std::vector<Entry> stack;
    for (const TxEvent& e : events) {
        if (e.deposit) {
            stack.push_back({e.index, e.value, false});
            continue;
        }
        if (stack.empty()) {
            out.underflow.push_back(e.index);
            continue;
        }
        // Top group of k entries.
        bool done = false;
        for (std::size_t k = 1; k <= std::min(m, stack.size()) && !done; ++k) {
            i128 sum = 0;
            bool overtaken = false;
            for (std::size_t t = stack.size() - k; t < stack.size(); ++t) {
                sum += stack[t].value;
                overtaken = overtaken || stack[t].overtaken;
            }
            if (!within_tolerance(sum, e.value, params.tolerance_pct)) continue;
            if (overtaken) {
                InterleaveFlag f;
                for (std::size_t t = stack.size() - k; t < stack.size(); ++t) f.deposits.push_back(stack[t].index);
                f.withdrawal = e.index;
                out.flags.push_back(std::move(f));
            }
            stack.resize(stack.size() - k);
            for (auto& s : stack) s.overtaken = true;
            done = true;
        }
        if (done) continue;
        // A group below the top: the withdrawal skipped over pending deposits.
        const std::size_t n = stack.size();
        for (std::size_t k = 1; k <= std::min(m, n) && !done; ++k) {
            for_each_combo(n, k, [&](const std::vector<std::uint32_t>& combo) {
                i128 sum = 0;
                for (auto t : combo) sum += stack[t].value;
                if (!within_tolerance(sum, e.value, params.tolerance_pct)) return true;
                InterleaveFlag f;
                for (auto t : combo) f.deposits.push_back(stack[t].index);
                f.withdrawal = e.index;
                out.flags.push_back(std::move(f));
                for (auto it = combo.rbegin(); it != combo.rend(); ++it)
                    stack.erase(stack.begin() + static_cast<std::ptrdiff_t>(*it));
                done = true;
                return false;
            });
        }
        // Otherwise a plain value mismatch; left for the round-1 merge.
    }
    return out;
}

// ---------------------------------------------------------------------------
// Round 1

Round1Output round1_intra_tx(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W,
                             const MatchParams& params) {
    params.validate();
    Ctx c{D, W, params};
    Positions P = merge_positions(D, W);
    Round1Output out;
    const auto& S = P.stream;

    auto plain_unit = [&](bool dep, std::uint32_t idx) {
        Unit u;
        if (dep) {
            u.deposits.push_back(idx);
            u.remainder = D[idx].value;
            u.pos = P.dpos[idx];
            u.block = D[idx].block;
            out.residuals.deposits.push_back(std::move(u));
        } else {
            u.withdrawals.push_back(idx);
            u.remainder = -static_cast<i128>(W[idx].expected_value_in);
            u.pos = P.wpos[idx];
            u.block = W[idx].block;
            out.residuals.withdrawals.push_back(std::move(u));
        }
    };
    auto txid_of = [&](std::size_t s) -> const std::string& {
        return S[s].first ? D[S[s].second].txid : W[S[s].second].txid;
    };

    std::size_t a = 0;
    while (a < S.size()) {
        std::size_t b = a + 1;
        const std::string& tx = txid_of(a);
        while (b < S.size() && txid_of(b) == tx) ++b;

        bool has_d = false, has_w = false;
        for (std::size_t s = a; s < b; ++s) (S[s].first ? has_d : has_w) = true;
        if (!(has_d && has_w)) {
            for (std::size_t s = a; s < b; ++s) plain_unit(S[s].first, S[s].second);
            a = b;
            continue;
        }

        std::vector<TxEvent> events;
        for (std::size_t s = a; s < b; ++s) {
            auto [dep, idx] = S[s];
            events.push_back({dep, dep ? D[idx].value : W[idx].expected_value_in, idx});
        }
        InterleaveResult ir = check_interleaving(events, params);
        std::vector<bool> taken_d, taken_w;
        std::vector<std::uint32_t> dl, wl;
        std::vector<std::uint32_t> flagged_d, flagged_w;
        for (const auto& f : ir.flags) {
            IndexViolation v;
            v.kind = ViolationKind::Interleaved;
            v.deposits = f.deposits;
            std::sort(v.deposits.begin(), v.deposits.end());
            v.withdrawals = {f.withdrawal};
            v.value_gap = dsum(c, v.deposits) - wsum(c, v.withdrawals);
            v.block_gap = 0;
            flagged_d.insert(flagged_d.end(), v.deposits.begin(), v.deposits.end());
            flagged_w.push_back(f.withdrawal);
            out.interleaved.push_back(std::move(v));
        }
        for (std::size_t s = a; s < b; ++s) {
            auto [dep, idx] = S[s];
            auto& fl = dep ? flagged_d : flagged_w;
            if (std::find(fl.begin(), fl.end(), idx) != fl.end()) continue;
            (dep ? dl : wl).push_back(idx);
        }

        while (!dl.empty() && !wl.empty()) {
            auto pick = best_intra(c, dl, wl);
            if (!pick) break;
            IndexGroup g;
            for (auto k : pick->ds) g.deposits.push_back(dl[k]);
            for (auto k : pick->ws) g.withdrawals.push_back(wl[k]);
            g.intra_tx = true;
            out.matches.push_back(std::move(g));
            erase_positions(dl, pick->ds);
            erase_positions(wl, pick->ws);
        }

        if (!dl.empty() && !wl.empty()) {
            Unit u;
            u.deposits = dl;
            u.withdrawals = wl;
            u.remainder = dsum(c, dl) - wsum(c, wl);
            u.pos = std::min(P.dpos[dl.front()], P.wpos[wl.front()]);
            u.block = D[dl.front()].block;
            if (u.remainder == 0) {
                out.matches.push_back(IndexGroup{dl, wl, true});
            } else {
                (u.deposit_side() ? out.residuals.deposits : out.residuals.withdrawals).push_back(std::move(u));
            }
        } else {
            // Preserve position order of one-sided leftovers.
            for (auto idx : dl) plain_unit(true, idx);
            for (auto idx : wl) plain_unit(false, idx);
        }
        a = b;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Round 2

Round2Output round2_cross_tx(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W,
                             const Residuals& R, const MatchParams& params) {
    params.validate();
    Ctx c{D, W, params};
    const std::size_t m = static_cast<std::size_t>(params.max_group);
    const auto& RD = R.deposits;
    const auto& RW = R.withdrawals;
    std::vector<bool> used_d(RD.size(), false), used_w(RW.size(), false);
    Round2Output out;

    auto emit = [&](const std::vector<std::size_t>& dus, const std::vector<std::size_t>& wus) {
        std::vector<const AccountId*> accts;
        IndexGroup g;
        g.intra_tx = false;
        i128 gap = 0;
        for (auto i : dus) {
            used_d[i] = true;
            collect_accounts(c, RD[i], accts);
            g.deposits.insert(g.deposits.end(), RD[i].deposits.begin(), RD[i].deposits.end());
            g.withdrawals.insert(g.withdrawals.end(), RD[i].withdrawals.begin(), RD[i].withdrawals.end());
            gap += RD[i].remainder;
        }
        for (auto i : wus) {
            used_w[i] = true;
            collect_accounts(c, RW[i], accts);
            g.deposits.insert(g.deposits.end(), RW[i].deposits.begin(), RW[i].deposits.end());
            g.withdrawals.insert(g.withdrawals.end(), RW[i].withdrawals.begin(), RW[i].withdrawals.end());
            gap += RW[i].remainder;
        }
        std::sort(g.deposits.begin(), g.deposits.end());
        std::sort(g.withdrawals.begin(), g.withdrawals.end());
        if (single_account(accts)) {
            out.matches.push_back(std::move(g));
        } else {
            IndexViolation v;
            v.kind = ViolationKind::III_AccountMismatch;
            v.value_gap = gap;
            v.block_gap = block_gap_of(c, g.deposits, g.withdrawals);
            v.deposits = std::move(g.deposits);
            v.withdrawals = std::move(g.withdrawals);
            out.mismatches.push_back(std::move(v));
        }
    };

    auto pos_less = [](const Unit& u, std::uint64_t p) { return u.pos < p; };

    // Forward: each deposit against withdrawals before the next deposit.
    for (std::size_t i = 0; i < RD.size(); ++i) {
        const Unit& d = RD[i];
        std::uint64_t next = i + 1 < RD.size() ? RD[i + 1].pos : std::numeric_limits<std::uint64_t>::max();
        auto it = std::lower_bound(RW.begin(), RW.end(), d.pos + 1, pos_less);
        std::vector<std::size_t> window;
        for (; it != RW.end() && it->pos < next && window.size() < kMaxWindow; ++it) {
            std::size_t k = static_cast<std::size_t>(it - RW.begin());
            if (used_w[k]) continue;
            if (it->block - d.block > params.timeout_blocks) break;
            window.push_back(k);
        }
        if (window.empty()) continue;
        const AccountId* dtok = unit_token(c, d);
        std::vector<const AccountId*> daccts;
        collect_accounts(c, d, daccts);
        // Account-consistent candidates first, then smallest gap, then fewest
        // records.
        std::optional<std::vector<std::size_t>> best;
        Gap best_gap;
        bool best_mismatch = true;
        for (std::size_t s = 1; s <= m; ++s) {
            for_each_combo(window.size(), s, [&](const std::vector<std::uint32_t>& combo) {
                i128 sum = 0;
                std::vector<const AccountId*> wt;
                std::vector<const AccountId*> accts = daccts;
                for (auto k : combo) {
                    sum += RW[window[k]].magnitude();
                    wt.push_back(unit_token(c, RW[window[k]]));
                    collect_accounts(c, RW[window[k]], accts);
                }
                Gap g = rel_gap(d.magnitude(), sum);
                if (!gap_ok(g, params.tolerance_pct) || !tokens_compatible({dtok}, wt)) return true;
                bool mismatch = !single_account(accts);
                if (!best || (best_mismatch && !mismatch) || (mismatch == best_mismatch && g < best_gap)) {
                    best_mismatch = mismatch;
                    best_gap = g;
                    best = std::vector<std::size_t>{};
                    for (auto k : combo) best->push_back(window[k]);
                }
                return true;
            });
        }
        if (best) emit({i}, *best);
    }

    // Reverse: each remaining withdrawal against the deposits immediately
    // preceding it, back to the previous residual withdrawal.
    if (params.use_reverse_pass) {
        std::uint64_t prev_pos = 0;
        bool have_prev = false;
        for (std::size_t j = 0; j < RW.size(); ++j) {
            if (used_w[j]) continue;
            const Unit& w = RW[j];
            auto e = static_cast<std::size_t>(std::lower_bound(RD.begin(), RD.end(), w.pos, pos_less) - RD.begin());
            const AccountId* wt = unit_token(c, w);
            i128 sum = 0;
            std::vector<const AccountId*> dt;
            for (std::size_t k = 1; k <= m && k <= e; ++k) {
                const Unit& d = RD[e - k];
                if (used_d[e - k] || (have_prev && d.pos <= prev_pos)) break;
                if (w.block - d.block > params.timeout_blocks) break;
                sum += d.magnitude();
                dt.push_back(unit_token(c, d));
                if (within_tolerance(sum, w.magnitude(), params.tolerance_pct) && tokens_compatible(dt, {wt})) {
                    std::vector<std::size_t> dus;
                    for (std::size_t q = e - k; q < e; ++q) dus.push_back(q);
                    emit(dus, {j});
                    break;
                }
            }
            prev_pos = w.pos;
            have_prev = true;
        }
    }

    for (std::size_t i = 0; i < RD.size(); ++i)
        if (!used_d[i]) out.residuals.deposits.push_back(RD[i]);
    for (std::size_t j = 0; j < RW.size(); ++j)
        if (!used_w[j]) out.residuals.withdrawals.push_back(RW[j]);
    return out;
}

// ---------------------------------------------------------------------------
// Round 3

std::vector<IndexViolation> round3_classify(const std::vector<DepositRecord>& D,
                                            const std::vector<WithdrawalRecord>& W, const Residuals& R,
                                            const MatchParams& params) {
    Ctx c{D, W, params};
    const auto& RD = R.deposits;
    const auto& RW = R.withdrawals;
    std::vector<bool> paired_d(RD.size(), false), paired_w(RW.size(), false);
    std::vector<std::pair<std::uint64_t, IndexViolation>> out;

    // Same-account residual pairs become value mismatches.
    auto pos_less = [](const Unit& u, std::uint64_t p) { return u.pos < p; };
    for (std::size_t i = 0; i < RD.size(); ++i) {
        const Unit& d = RD[i];
        if (d.is_virtual()) continue;
        const DepositRecord& dr = D[d.deposits.front()];
        std::uint64_t next = i + 1 < RD.size() ? RD[i + 1].pos : std::numeric_limits<std::uint64_t>::max();
        auto it = std::lower_bound(RW.begin(), RW.end(), d.pos + 1, pos_less);
        std::size_t scanned = 0;
        for (; it != RW.end() && it->pos < next && scanned < kMaxWindow; ++it, ++scanned) {
            std::size_t k = static_cast<std::size_t>(it - RW.begin());
            if (paired_w[k] || it->is_virtual()) continue;
            if (it->block - d.block > params.timeout_blocks) break;
            const WithdrawalRecord& wr = W[it->withdrawals.front()];
            if (wr.withdrawer != dr.depositor) continue;
            if (!tokens_compatible({&dr.token}, {w_token(wr)})) continue;
            i128 gap = d.remainder + it->remainder;
            if (gap == 0) continue;
            IndexViolation v;
            v.kind = gap < 0 ? ViolationKind::IV_LowerValueDeposit : ViolationKind::V_HigherValueDeposit;
            v.deposits = d.deposits;
            v.withdrawals = it->withdrawals;
            v.value_gap = gap;
            v.block_gap = wr.block - dr.block;
            paired_d[i] = true;
            paired_w[k] = true;
            out.emplace_back(d.pos, std::move(v));
            break;
        }
    }

    auto leftover = [&](const Unit& u) {
        IndexViolation v;
        v.deposits = u.deposits;
        v.withdrawals = u.withdrawals;
        v.value_gap = u.remainder;
        if (u.is_virtual()) {
            v.kind = u.remainder < 0 ? ViolationKind::IV_LowerValueDeposit : ViolationKind::V_HigherValueDeposit;
            v.block_gap = block_gap_of(c, u.deposits, u.withdrawals);
        } else {
            v.kind = u.deposits.empty() ? ViolationKind::I_StandaloneWithdrawal : ViolationKind::II_StandaloneDeposit;
        }
        out.emplace_back(u.pos, std::move(v));
    };
    for (std::size_t i = 0; i < RD.size(); ++i)
        if (!paired_d[i]) leftover(RD[i]);
    for (std::size_t j = 0; j < RW.size(); ++j)
        if (!paired_w[j]) leftover(RW[j]);

    return by_position(out, D.size() + W.size());
}

// ---------------------------------------------------------------------------

namespace {

template <typename T>
bool is_stream_ordered(const std::vector<T>& v) {
    for (std::size_t i = 1; i < v.size(); ++i)
        if (key_less(v[i], v[i - 1])) return false;
    return true;
}

MatchResult materialize(const Ctx& c, const IndexGroup& g) {
    MatchResult m;
    m.intra_tx = g.intra_tx;
    m.deposits.reserve(g.deposits.size());
    m.withdrawals.reserve(g.withdrawals.size());
    i128 in = 0, out = 0;
    for (auto i : g.deposits) {
        m.deposits.push_back(c.D[i]);
        in += c.D[i].value;
    }
    for (auto i : g.withdrawals) {
        m.withdrawals.push_back(c.W[i]);
        out += c.W[i].value_out;
        if (c.W[i].origin_func == WithdrawalOrigin::Mint) m.kind = MatchKind::AtomicAddLiquidity;
    }
    if (out > 0) m.exchange_rate = Rational(in, out);
    return m;
}

ViolationRecord materialize(const Ctx& c, const IndexViolation& iv) {
    ViolationRecord v;
    v.kind = iv.kind;
    v.anomaly = anomaly_for(iv.kind);
    v.deposits.reserve(iv.deposits.size());
    v.withdrawals.reserve(iv.withdrawals.size());
    for (auto i : iv.deposits) v.deposits.push_back(c.D[i]);
    for (auto i : iv.withdrawals) v.withdrawals.push_back(c.W[i]);
    v.value_gap = iv.value_gap;
    v.block_gap = iv.block_gap;
    return v;
}

}  // namespace

DetectionReport run_matchmaker(const std::vector<DepositRecord>& D, const std::vector<WithdrawalRecord>& W,
                               const MatchParams& params) {
    params.validate();
    if (!is_stream_ordered(D) || !is_stream_ordered(W))
        throw std::invalid_argument("run_matchmaker: inputs must be stream-ordered");
    Ctx c{D, W, params};
    Round1Output r1 = round1_intra_tx(D, W, params);
    Round2Output r2 = round2_cross_tx(D, W, r1.residuals, params);
    std::vector<IndexViolation> r3 = round3_classify(D, W, r2.residuals, params);

    Positions P = merge_positions(D, W);
    auto first_pos = [&](const std::vector<std::uint32_t>& ds, const std::vector<std::uint32_t>& ws) {
        std::uint64_t p = std::numeric_limits<std::uint64_t>::max();
        for (auto i : ds) p = std::min(p, P.dpos[i]);
        for (auto i : ws) p = std::min(p, P.wpos[i]);
        return p;
    };

    std::vector<std::pair<std::uint64_t, const IndexGroup*>> groups;
    for (const auto& g : r1.matches) groups.emplace_back(first_pos(g.deposits, g.withdrawals), &g);
    for (const auto& g : r2.matches) groups.emplace_back(first_pos(g.deposits, g.withdrawals), &g);

    std::vector<std::pair<std::uint64_t, const IndexViolation*>> viols;
    for (const auto& v : r1.interleaved) viols.emplace_back(first_pos(v.deposits, v.withdrawals), &v);
    for (const auto& v : r2.mismatches) viols.emplace_back(first_pos(v.deposits, v.withdrawals), &v);
    for (const auto& v : r3) viols.emplace_back(first_pos(v.deposits, v.withdrawals), &v);

    const std::size_t n = D.size() + W.size();
    DetectionReport rep;
    rep.matches.reserve(groups.size());
    rep.violations.reserve(viols.size());
    for (const IndexGroup* g : by_position(groups, n)) rep.matches.push_back(materialize(c, *g));
    for (const IndexViolation* v : by_position(viols, n)) rep.violations.push_back(materialize(c, *v));
    return rep;
}

std::optional<std::string> validate_report(const DetectionReport& report, const MatchParams& params) {
    for (std::size_t i = 0; i < report.matches.size(); ++i) {
        const MatchResult& m = report.matches[i];
        std::string where = "match " + std::to_string(i) + ": ";
        if (m.deposits.empty() || m.withdrawals.empty()) return where + "empty side";
        i128 in = 0, out = 0;
        for (const auto& d : m.deposits) in += d.value;
        for (const auto& w : m.withdrawals) out += w.expected_value_in;
        bool exact_merge = m.intra_tx && in == out;
        if (!exact_merge && !within_tolerance(in, out, params.tolerance_pct)) return where + "value outside tolerance";
        if (m.intra_tx) {
            for (const auto& d : m.deposits)
                if (d.txid != m.deposits.front().txid) return where + "intra-tx match spans transactions";
            for (const auto& w : m.withdrawals)
                if (w.txid != m.deposits.front().txid) return where + "intra-tx match spans transactions";
            continue;
        }
        for (const auto& d : m.deposits)
            for (const auto& w : m.withdrawals)
                if (d.depositor != w.withdrawer) return where + "account disagreement";
        StreamKey dmin = m.deposits.front().key(), wmax = m.withdrawals.front().key();
        std::uint64_t bmin = m.deposits.front().block, bmax = 0;
        for (const auto& d : m.deposits) {
            dmin = std::min(dmin, d.key());
            bmin = std::min(bmin, d.block);
        }
        for (const auto& w : m.withdrawals) {
            wmax = std::max(wmax, w.key());
            bmax = std::max(bmax, w.block);
        }
        if (!(dmin < wmax)) return where + "withdrawal precedes deposit";
        if (bmax - bmin > params.timeout_blocks) return where + "block gap beyond timeout";
    }
    for (std::size_t i = 0; i < report.violations.size(); ++i) {
        const ViolationRecord& v = report.violations[i];
        std::string where = "violation " + std::to_string(i) + ": ";
        switch (v.kind) {
            case ViolationKind::I_StandaloneWithdrawal:
                if (!v.deposits.empty()) return where + "kind I with deposits";
                break;
            case ViolationKind::II_StandaloneDeposit:
                if (!v.withdrawals.empty()) return where + "kind II with withdrawals";
                break;
            case ViolationKind::IV_LowerValueDeposit:
                if (v.value_gap >= 0) return where + "kind IV with non-negative gap";
                break;
            case ViolationKind::V_HigherValueDeposit:
                if (v.value_gap <= 0) return where + "kind V with non-positive gap";
                break;
            default: break;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

Json gap_json(i128 v) {
    if (v >= std::numeric_limits<std::int64_t>::min() && v <= std::numeric_limits<std::int64_t>::max())
        return Json(static_cast<std::int64_t>(v));
    return Json(to_string(v));
}

}  // namespace

Json to_json(const MatchResult& m) {
    Json ds = Json::array(), ws = Json::array();
    for (const auto& d : m.deposits) ds.push_back(encode(d));
    for (const auto& w : m.withdrawals) ws.push_back(encode(w));
    return Json{{"kind", to_string(m.kind)},
                {"intra_tx", m.intra_tx},
                {"exchange_rate", m.exchange_rate ? Json(m.exchange_rate->to_string()) : Json(nullptr)},
                {"deposits", ds},
                {"withdrawals", ws}};
}

Json to_json(const ViolationRecord& v) {
    Json ds = Json::array(), ws = Json::array();
    for (const auto& d : v.deposits) ds.push_back(encode(d));
    for (const auto& w : v.withdrawals) ws.push_back(encode(w));
    return Json{{"kind", to_string(v.kind)},
                {"anomaly", v.anomaly ? Json(to_string(*v.anomaly)) : Json(nullptr)},
                {"value_gap", gap_json(v.value_gap)},
                {"block_gap", v.block_gap ? Json(*v.block_gap) : Json(nullptr)},
                {"deposits", ds},
                {"withdrawals", ws}};
}

Json to_json(const DetectionReport& r) {
    Json ms = Json::array(), vs = Json::array();
    for (const auto& m : r.matches) ms.push_back(to_json(m));
    for (const auto& v : r.violations) vs.push_back(to_json(v));
    return Json{{"matches", ms}, {"violations", vs}};
}

}  // namespace atomscan
