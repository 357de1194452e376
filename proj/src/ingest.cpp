#include "atomscan/ingest.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

namespace atomscan {

std::string to_string(Protocol p) {
    return p == Protocol::UniswapV2Like ? "UniswapV2Like" : "CrossChainEndpoint";
}

Protocol parse_protocol(std::string_view text) {
    if (text == "UniswapV2Like") return Protocol::UniswapV2Like;
    if (text == "CrossChainEndpoint") return Protocol::CrossChainEndpoint;
    throw IngestError(IngestError::Code::BadRegistry, "unknown protocol '" + std::string(text) + "'");
}

PoolRegistry::PoolRegistry(std::vector<PoolInfo> pools) : pools_(std::move(pools)) {
    for (std::size_t i = 0; i < pools_.size(); ++i) {
        const PoolInfo& p = pools_[i];
        if (p.protocol == Protocol::UniswapV2Like && p.token0 == p.token1)
            throw IngestError(IngestError::Code::BadRegistry, "pool " + p.pool.str() + " has token0 == token1");
        if (!index_.emplace(p.pool, i).second)
            throw IngestError(IngestError::Code::BadRegistry, "duplicate pool " + p.pool.str());
    }
}

PoolRegistry PoolRegistry::from_json(const Json& j) {
    if (!j.is_object() || !j.contains("pools") || !j["pools"].is_array())
        throw IngestError(IngestError::Code::BadRegistry, "registry must be an object with a 'pools' array");
    std::vector<PoolInfo> pools;
    for (const auto& e : j["pools"]) {
        try {
            PoolInfo p;
            p.pool = AccountId(e.at("pool").get<std::string>());
            p.protocol = parse_protocol(e.value("protocol", std::string("UniswapV2Like")));
            if (p.protocol == Protocol::UniswapV2Like) {
                p.token0 = AccountId(e.at("token0").get<std::string>());
                p.token1 = AccountId(e.at("token1").get<std::string>());
            }
            pools.push_back(std::move(p));
        } catch (const Json::exception& ex) {
            throw IngestError(IngestError::Code::BadRegistry, std::string("bad registry entry: ") + ex.what());
        } catch (const std::invalid_argument& ex) {
            throw IngestError(IngestError::Code::BadRegistry, std::string("bad registry entry: ") + ex.what());
        }
    }
    return PoolRegistry(std::move(pools));
}

PoolRegistry PoolRegistry::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestError(IngestError::Code::Io, "cannot open registry " + path);
    Json j;
    try {
        j = Json::parse(in);
    } catch (const Json::exception& ex) {
        throw IngestError(IngestError::Code::BadRegistry, "registry " + path + ": " + ex.what());
    }
    return from_json(j);
}

Json PoolRegistry::to_json() const {
    Json arr = Json::array();
    for (const auto& p : pools_) {
        Json e{{"pool", p.pool.str()}};
        if (p.protocol == Protocol::UniswapV2Like) {
            e["token0"] = p.token0.str();
            e["token1"] = p.token1.str();
        }
        e["protocol"] = to_string(p.protocol);
        arr.push_back(std::move(e));
    }
    return Json{{"pools", arr}};
}

const PoolInfo* PoolRegistry::find(const AccountId& pool) const {
    auto it = index_.find(pool);
    return it == index_.end() ? nullptr : &pools_[it->second];
}

namespace {

constexpr std::array<const char*, 12> kKnownFields = {"txid",     "block", "tx_index", "chain",
                                                      "caller",   "callee_contract", "callee_func", "call_seq",
                                                      "args",     "gas",   "gas_price", "success"};

bool known_field(const std::string& k) {
    return std::any_of(kKnownFields.begin(), kKnownFields.end(), [&](const char* f) { return k == f; });
}

}  // namespace

std::vector<CallRecord> parse_trace(std::istream& in, ParseStats* stats) {
    std::vector<CallRecord> out;
    std::string line;
    std::size_t line_no = 0;
    ParseStats local;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        ++local.lines;
        try {
            Json j = Json::parse(line);
            out.push_back(decode_call(j));
            for (auto it = j.begin(); it != j.end(); ++it)
                if (!known_field(it.key())) ++local.unknown_fields;
        } catch (const Json::exception& ex) {
            throw IngestError(IngestError::Code::MalformedLine,
                              "line " + std::to_string(line_no) + ": " + ex.what(), line_no);
        } catch (const DecodeError& ex) {
            throw IngestError(IngestError::Code::MalformedLine,
                              "line " + std::to_string(line_no) + ": " + ex.what(), line_no);
        } catch (const std::invalid_argument& ex) {
            throw IngestError(IngestError::Code::MalformedLine,
                              "line " + std::to_string(line_no) + ": " + ex.what(), line_no);
        }
    }
    std::stable_sort(out.begin(), out.end(),
                     [](const CallRecord& a, const CallRecord& b) { return stream_order(a, b) < 0; });
    if (stats) *stats = local;
    return out;
}

std::vector<CallRecord> parse_trace_file(const std::string& path, ParseStats* stats) {
    std::ifstream in(path);
    if (!in) throw IngestError(IngestError::Code::Io, "cannot open trace " + path);
    return parse_trace(in, stats);
}

void write_trace(std::ostream& out, const std::vector<CallRecord>& records) {
    for (const auto& r : records) out << encode(r).dump() << '\n';
}

namespace {

Amount require_amount(const CallRecord& r, std::initializer_list<const char*> names) {
    for (const char* n : names)
        if (auto v = r.arg_amount(n)) return *v;
    throw IngestError(IngestError::Code::MissingArg,
                      "MissingArg(" + r.callee_func + ", " + *names.begin() + ") in tx " + r.txid);
}

Amount optional_amount(const CallRecord& r, const char* name) { return r.arg_amount(name).value_or(0); }

AccountId require_account(const CallRecord& r, const char* name) {
    auto a = r.arg_account(name);
    if (!a) throw IngestError(IngestError::Code::MissingArg, "MissingArg(" + r.callee_func + ", " + name + ") in tx " + r.txid);
    return *a;
}

// Appends `r` to `out` when it is a deposit into or a withdrawal from `p`.
void classify(const CallRecord& r, const PoolInfo& p, Candidates& out) {
    if (!r.success) return;
    bool token_call = r.callee_contract == p.token0 || r.callee_contract == p.token1 || r.callee_contract == p.pool;
    if (token_call && (r.callee_func == "transfer" || r.callee_func == "transferFrom")) {
        AccountId to = require_account(r, "to");
        if (to != p.pool) return;
        DepositRecord d;
        d.pool = p.pool;
        d.token = r.callee_contract;
        d.value = require_amount(r, {"amount", "value"});
        if (d.value == 0) return;
        if (r.callee_func == "transfer") {
            if (r.caller == p.pool) return;
            d.depositor = r.caller;
            d.origin_func = DepositOrigin::Transfer;
        } else {
            d.depositor = require_account(r, "from");
            d.origin_func = DepositOrigin::TransferFrom;
        }
        d.txid = r.txid;
        d.block = r.block;
        d.tx_index = r.tx_index;
        d.call_seq = r.call_seq;
        out.deposits.push_back(std::move(d));
        return;
    }
    if (r.callee_contract != p.pool) return;
    WithdrawalRecord w;
    if (r.callee_func == "swap") {
        w.origin_func = WithdrawalOrigin::Swap;
        w.expected_value_in = require_amount(r, {"amountIn"});
        w.value_out = require_amount(r, {"amountOut"});
        w.token_in = r.arg_account("tokenIn").value_or(p.token0);
        w.token_out = r.arg_account("tokenOut").value_or(w.token_in == p.token0 ? p.token1 : p.token0);
    } else if (r.callee_func == "mint") {
        w.origin_func = WithdrawalOrigin::Mint;
        w.expected_value_in = require_amount(r, {"amount0"}) + require_amount(r, {"amount1"});
        w.value_out = optional_amount(r, "liquidity");
        w.token_out = p.pool;
    } else if (r.callee_func == "burn") {
        w.origin_func = WithdrawalOrigin::Burn;
        w.expected_value_in = require_amount(r, {"liquidity"});
        w.value_out = optional_amount(r, "amount0") + optional_amount(r, "amount1");
        w.token_in = p.pool;
        w.token_out = p.token0;
    } else {
        return;
    }
    if (w.expected_value_in == 0 && w.value_out == 0) return;
    w.withdrawer = require_account(r, "to");
    w.pool = p.pool;
    w.txid = r.txid;
    w.block = r.block;
    w.tx_index = r.tx_index;
    w.call_seq = r.call_seq;
    out.withdrawals.push_back(std::move(w));
}

}  // namespace

Candidates extract_candidates(const std::vector<CallRecord>& records, const PoolRegistry& registry,
                              const AccountId& pool) {
    const PoolInfo* p = registry.find(pool);
    if (!p) throw IngestError(IngestError::Code::UnknownPool, "UnknownPool(" + pool.str() + ")");
    Candidates out;
    if (p->protocol != Protocol::UniswapV2Like) return out;
    for (const auto& r : records) classify(r, *p, out);
    return out;
}

std::map<AccountId, Candidates> extract_all(const std::vector<CallRecord>& records, const PoolRegistry& registry) {
    std::map<AccountId, Candidates> out;
    std::unordered_map<AccountId, std::vector<const PoolInfo*>> by_contract;
    for (const auto& p : registry.pools()) {
        if (p.protocol != Protocol::UniswapV2Like) continue;
        out[p.pool];
        by_contract[p.pool].push_back(&p);
        by_contract[p.token0].push_back(&p);
        by_contract[p.token1].push_back(&p);
    }
    for (const auto& r : records) {
        auto it = by_contract.find(r.callee_contract);
        if (it == by_contract.end()) continue;
        for (const PoolInfo* p : it->second) classify(r, *p, out[p->pool]);
    }
    return out;
}

}  // namespace atomscan
