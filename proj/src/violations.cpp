#include "atomscan/violations.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace atomscan {

RateTable::RateTable(std::vector<RateEntry> entries) : entries_(std::move(entries)) {
    std::stable_sort(entries_.begin(), entries_.end(), [](const RateEntry& a, const RateEntry& b) {
        return std::tie(a.token, a.block) < std::tie(b.token, b.block);
    });
}

RateTable RateTable::parse_csv(std::istream& in) {
    std::vector<RateEntry> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line_no == 1 && line.rfind("token", 0) == 0) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 4) throw std::invalid_argument("rates line " + std::to_string(line_no) + ": expected 4 columns");
        try {
            RateEntry e;
            e.token = AccountId(cells[0]);
            e.block = std::stoull(cells[1]);
            e.usd_rate = Rational::parse(cells[2]) / Rational::parse(cells[3]);
            out.push_back(std::move(e));
        } catch (const std::exception& ex) {
            throw std::invalid_argument("rates line " + std::to_string(line_no) + ": " + ex.what());
        }
    }
    return RateTable(std::move(out));
}

RateTable RateTable::load_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open rates file " + path);
    return parse_csv(in);
}

const RateEntry& RateTable::nearest(const AccountId& token, std::uint64_t block) const {
    auto lo = std::lower_bound(entries_.begin(), entries_.end(), token,
                               [](const RateEntry& e, const AccountId& t) { return e.token < t; });
    auto hi = std::upper_bound(lo, entries_.end(), token, [](const AccountId& t, const RateEntry& e) { return t < e.token; });
    if (lo == hi) throw NoRate(token);
    auto it = std::lower_bound(lo, hi, block, [](const RateEntry& e, std::uint64_t b) { return e.block < b; });
    if (it == hi) return *(hi - 1);
    if (it == lo || it->block == block) return *it;
    auto prev = it - 1;
    return (block - prev->block <= it->block - block) ? *prev : *it;
}

Rational estimate_value(const AccountId& token, Amount amount, std::uint64_t block, const RateTable& rates) {
    return rates.nearest(token, block).usd_rate * Rational::from_i128(amount);
}

AccountId value_token(const ViolationRecord& v) {
    if (!v.deposits.empty()) return v.deposits.front().token;
    const WithdrawalRecord& w = v.withdrawals.front();
    return w.token_in.empty() ? w.token_out : w.token_in;
}

Amount violation_amount(const ViolationRecord& v) {
    switch (v.kind) {
        case ViolationKind::I_StandaloneWithdrawal: {
            Amount s = 0;
            for (const auto& w : v.withdrawals) s += w.expected_value_in;
            return s;
        }
        case ViolationKind::II_StandaloneDeposit:
        case ViolationKind::III_AccountMismatch: {
            Amount s = 0;
            for (const auto& d : v.deposits) s += d.value;
            return s;
        }
        default: return static_cast<Amount>(v.value_gap < 0 ? -v.value_gap : v.value_gap);
    }
}

std::uint64_t valuation_block(const ViolationRecord& v) {
    return v.withdrawals.empty() ? v.deposits.front().block : v.withdrawals.front().block;
}

std::size_t SummaryTable::total_count() const {
    std::size_t n = 0;
    for (const auto& r : rows) n += r.count;
    return n;
}

SummaryTable aggregate(const DetectionReport& report, const RateTable* rates) {
    const ViolationKind kinds[] = {ViolationKind::I_StandaloneWithdrawal, ViolationKind::II_StandaloneDeposit,
                                   ViolationKind::III_AccountMismatch,    ViolationKind::IV_LowerValueDeposit,
                                   ViolationKind::V_HigherValueDeposit,   ViolationKind::Interleaved};
    SummaryTable t;
    std::vector<std::set<std::string>> txs(7);
    for (auto k : kinds) {
        SummaryRow r;
        r.kind = to_string(k);
        if (auto a = anomaly_for(k)) r.anomaly = to_string(*a);
        t.rows.push_back(std::move(r));
    }
    SummaryRow atomic;
    atomic.kind = "Atomic";
    atomic.anomaly = to_string(AnomalyClass::A_Atomic);
    t.rows.push_back(std::move(atomic));

    auto value_into = [&](SummaryRow& row, const AccountId& token, Amount amount, std::uint64_t block) {
        if (!rates) {
            ++row.unvalued;
            return;
        }
        try {
            row.total_value_usd += estimate_value(token, amount, block, *rates);
        } catch (const NoRate&) {
            ++row.unvalued;
        }
    };

    for (const auto& v : report.violations) {
        std::size_t idx = static_cast<std::size_t>(std::find(std::begin(kinds), std::end(kinds), v.kind) - std::begin(kinds));
        SummaryRow& row = t.rows[idx];
        ++row.count;
        value_into(row, value_token(v), violation_amount(v), valuation_block(v));
        for (const auto& d : v.deposits) txs[idx].insert(d.txid);
        for (const auto& w : v.withdrawals) txs[idx].insert(w.txid);
    }
    for (const auto& m : report.matches) {
        SummaryRow& row = t.rows[6];
        ++row.count;
        Amount in = 0;
        for (const auto& d : m.deposits) in += d.value;
        value_into(row, m.deposits.front().token, in, m.withdrawals.front().block);
        for (const auto& d : m.deposits) txs[6].insert(d.txid);
        for (const auto& w : m.withdrawals) txs[6].insert(w.txid);
    }
    for (std::size_t i = 0; i < t.rows.size(); ++i) t.rows[i].distinct_tx = txs[i].size();
    return t;
}

std::string to_csv(const SummaryTable& t) {
    std::string out = "kind,anomaly,count,total_value_usd,unvalued,distinct_tx\n";
    for (const auto& r : t.rows) {
        out += r.kind + "," + r.anomaly + "," + std::to_string(r.count) + "," + r.total_value_usd.to_decimal(6) + "," +
               std::to_string(r.unvalued) + "," + std::to_string(r.distinct_tx) + "\n";
    }
    return out;
}

Json to_json(const SummaryTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        rows.push_back(Json{{"kind", r.kind},
                            {"anomaly", r.anomaly.empty() ? Json(nullptr) : Json(r.anomaly)},
                            {"count", r.count},
                            {"total_value_usd", r.total_value_usd.to_decimal(6)},
                            {"unvalued", r.unvalued},
                            {"distinct_tx", r.distinct_tx}});
    }
    return Json{{"rows", rows}};
}

}  // namespace atomscan
