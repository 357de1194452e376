#include "atomscan/trace_model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>

namespace atomscan {

AccountId::AccountId(std::string_view text) {
    if (text.empty()) throw std::invalid_argument("empty account id");
    std::string v(text);
    std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (v.rfind("0x", 0) != 0) v = "0x" + v;
    value_ = std::move(v);
}

CallSeq::CallSeq(std::vector<std::uint32_t> segments) : segs_(std::move(segments)) {
    if (segs_.empty()) throw std::invalid_argument("empty call sequence");
}

CallSeq CallSeq::parse(std::string_view dotted) {
    std::vector<std::uint32_t> segs;
    std::size_t start = 0;
    while (true) {
        std::size_t dot = dotted.find('.', start);
        std::string_view part = dotted.substr(start, dot == std::string_view::npos ? std::string_view::npos : dot - start);
        std::uint32_t v = 0;
        auto [p, ec] = std::from_chars(part.data(), part.data() + part.size(), v);
        if (part.empty() || ec != std::errc() || p != part.data() + part.size())
            throw std::invalid_argument("bad call_seq '" + std::string(dotted) + "'");
        segs.push_back(v);
        if (dot == std::string_view::npos) break;
        start = dot + 1;
    }
    return CallSeq(std::move(segs));
}

CallSeq CallSeq::from_digits(std::string_view digits) {
    std::vector<std::uint32_t> segs;
    for (char c : digits) {
        if (!std::isdigit(static_cast<unsigned char>(c))) throw std::invalid_argument("bad digit call_seq");
        segs.push_back(static_cast<std::uint32_t>(c - '0'));
    }
    return CallSeq(std::move(segs));
}

std::string CallSeq::to_string() const {
    std::string out;
    for (std::size_t i = 0; i < segs_.size(); ++i) {
        if (i) out.push_back('.');
        out += std::to_string(segs_[i]);
    }
    return out;
}

bool is_prefix_call(const CallSeq& parent, const CallSeq& child) {
    const auto& p = parent.segments();
    const auto& c = child.segments();
    return p.size() < c.size() && std::equal(p.begin(), p.end(), c.begin());
}

std::strong_ordering stream_order(const CallRecord& a, const CallRecord& b) { return a.key() <=> b.key(); }

std::optional<Amount> CallRecord::arg_amount(const std::string& name) const {
    auto it = args.find(name);
    if (it == args.end()) return std::nullopt;
    const ArgValue& v = it->second;
    if (auto u = std::get_if<std::uint64_t>(&v)) return *u;
    if (auto i = std::get_if<std::int64_t>(&v)) {
        if (*i < 0) return std::nullopt;
        return static_cast<Amount>(*i);
    }
    if (auto s = std::get_if<std::string>(&v)) {
        Amount out = 0;
        auto [p, ec] = std::from_chars(s->data(), s->data() + s->size(), out);
        if (s->empty() || ec != std::errc() || p != s->data() + s->size()) return std::nullopt;
        return out;
    }
    return std::nullopt;
}

std::optional<std::string> CallRecord::arg_string(const std::string& name) const {
    auto it = args.find(name);
    if (it == args.end()) return std::nullopt;
    if (auto s = std::get_if<std::string>(&it->second)) return *s;
    return std::nullopt;
}

std::optional<AccountId> CallRecord::arg_account(const std::string& name) const {
    auto s = arg_string(name);
    if (!s || s->empty()) return std::nullopt;
    return AccountId(*s);
}

std::optional<AnomalyClass> anomaly_for(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::I_StandaloneWithdrawal: return AnomalyClass::F_Freerider;
        case ViolationKind::II_StandaloneDeposit: return AnomalyClass::U_Underwater;
        case ViolationKind::IV_LowerValueDeposit: return AnomalyClass::D_Discount;
        case ViolationKind::V_HigherValueDeposit: return AnomalyClass::O_Overcharge;
        case ViolationKind::III_AccountMismatch:
        case ViolationKind::Interleaved: return std::nullopt;
    }
    return std::nullopt;
}

std::optional<ViolationKind> kind_for(AnomalyClass cls) {
    switch (cls) {
        case AnomalyClass::F_Freerider: return ViolationKind::I_StandaloneWithdrawal;
        case AnomalyClass::U_Underwater: return ViolationKind::II_StandaloneDeposit;
        case AnomalyClass::D_Discount: return ViolationKind::IV_LowerValueDeposit;
        case AnomalyClass::O_Overcharge: return ViolationKind::V_HigherValueDeposit;
        case AnomalyClass::A_Atomic: return std::nullopt;
    }
    return std::nullopt;
}

std::string to_string(ViolationKind kind) {
    switch (kind) {
        case ViolationKind::I_StandaloneWithdrawal: return "I";
        case ViolationKind::II_StandaloneDeposit: return "II";
        case ViolationKind::III_AccountMismatch: return "III";
        case ViolationKind::IV_LowerValueDeposit: return "IV";
        case ViolationKind::V_HigherValueDeposit: return "V";
        case ViolationKind::Interleaved: return "Interleaved";
    }
    return "?";
}

std::string to_string(AnomalyClass cls) {
    switch (cls) {
        case AnomalyClass::A_Atomic: return "A";
        case AnomalyClass::U_Underwater: return "U";
        case AnomalyClass::F_Freerider: return "F";
        case AnomalyClass::D_Discount: return "D";
        case AnomalyClass::O_Overcharge: return "O";
    }
    return "?";
}

std::string to_string(DepositOrigin origin) {
    switch (origin) {
        case DepositOrigin::Transfer: return "transfer";
        case DepositOrigin::TransferFrom: return "transferFrom";
        case DepositOrigin::MintSide: return "mint-side";
    }
    return "?";
}

std::string to_string(WithdrawalOrigin origin) {
    switch (origin) {
        case WithdrawalOrigin::Swap: return "swap";
        case WithdrawalOrigin::Mint: return "mint";
        case WithdrawalOrigin::Burn: return "burn";
    }
    return "?";
}

std::string to_string(DepositPattern p) {
    switch (p) {
        case DepositPattern::P1_NonStandardBalance: return "P1";
        case DepositPattern::P2_Interest: return "P2";
        case DepositPattern::P3_ExternalTransfer: return "P3";
        case DepositPattern::P4_BuggyRouter: return "P4";
        case DepositPattern::Unknown: return "Unknown";
    }
    return "?";
}

DepositPattern parse_deposit_pattern(std::string_view t) {
    for (auto p : {DepositPattern::P1_NonStandardBalance, DepositPattern::P2_Interest,
                   DepositPattern::P3_ExternalTransfer, DepositPattern::P4_BuggyRouter, DepositPattern::Unknown})
        if (to_string(p) == t) return p;
    throw DecodeError("unknown deposit pattern '" + std::string(t) + "'");
}

ViolationKind parse_violation_kind(std::string_view t) {
    for (auto k : {ViolationKind::I_StandaloneWithdrawal, ViolationKind::II_StandaloneDeposit,
                   ViolationKind::III_AccountMismatch, ViolationKind::IV_LowerValueDeposit,
                   ViolationKind::V_HigherValueDeposit, ViolationKind::Interleaved})
        if (to_string(k) == t) return k;
    throw DecodeError("unknown violation kind '" + std::string(t) + "'");
}

AnomalyClass parse_anomaly_class(std::string_view t) {
    for (auto c : {AnomalyClass::A_Atomic, AnomalyClass::U_Underwater, AnomalyClass::F_Freerider,
                   AnomalyClass::D_Discount, AnomalyClass::O_Overcharge})
        if (to_string(c) == t) return c;
    throw DecodeError("unknown anomaly class '" + std::string(t) + "'");
}

DepositOrigin parse_deposit_origin(std::string_view t) {
    for (auto o : {DepositOrigin::Transfer, DepositOrigin::TransferFrom, DepositOrigin::MintSide})
        if (to_string(o) == t) return o;
    throw DecodeError("unknown deposit origin '" + std::string(t) + "'");
}

WithdrawalOrigin parse_withdrawal_origin(std::string_view t) {
    for (auto o : {WithdrawalOrigin::Swap, WithdrawalOrigin::Mint, WithdrawalOrigin::Burn})
        if (to_string(o) == t) return o;
    throw DecodeError("unknown withdrawal origin '" + std::string(t) + "'");
}

// ---------------------------------------------------------------------------
// JSON encoding

namespace {

const Json& require(const Json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) throw DecodeError(std::string("missing field '") + field + "'");
    return *it;
}

std::string req_string(const Json& j, const char* field) {
    const Json& v = require(j, field);
    if (!v.is_string()) throw DecodeError(std::string("field '") + field + "' must be a string");
    return v.get<std::string>();
}

std::uint64_t req_uint(const Json& j, const char* field) {
    const Json& v = require(j, field);
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw DecodeError(std::string("field '") + field + "' must be a non-negative integer");
    return v.get<std::uint64_t>();
}

std::uint64_t opt_uint(const Json& j, const char* field, std::uint64_t dflt) {
    if (!j.contains(field) || j[field].is_null()) return dflt;
    return req_uint(j, field);
}

AccountId req_account(const Json& j, const char* field) {
    std::string s = req_string(j, field);
    if (s.empty()) throw DecodeError(std::string("field '") + field + "' is empty");
    return AccountId(s);
}

AccountId opt_account(const Json& j, const char* field) {
    if (!j.contains(field) || j[field].is_null()) return {};
    std::string s = req_string(j, field);
    return s.empty() ? AccountId{} : AccountId(s);
}

CallSeq req_seq(const Json& j, const char* field) {
    try {
        return CallSeq::parse(req_string(j, field));
    } catch (const std::invalid_argument& e) {
        throw DecodeError(e.what());
    }
}

}  // namespace

Json encode(const ArgValue& v) {
    return std::visit([](const auto& x) { return Json(x); }, v);
}

ArgValue decode_arg(const Json& j) {
    if (j.is_boolean()) return j.get<bool>();
    if (j.is_number_unsigned()) return j.get<std::uint64_t>();
    if (j.is_number_integer()) {
        auto v = j.get<std::int64_t>();
        if (v >= 0) return static_cast<std::uint64_t>(v);
        return v;
    }
    if (j.is_string()) return j.get<std::string>();
    throw DecodeError("argument must be a bool, integer or string");
}

Json encode(const CallRecord& r) {
    Json args = Json::object();
    for (const auto& [k, v] : r.args) args[k] = encode(v);
    return Json{{"txid", r.txid},
                {"block", r.block},
                {"tx_index", r.tx_index},
                {"chain", r.chain.value},
                {"caller", r.caller.str()},
                {"callee_contract", r.callee_contract.str()},
                {"callee_func", r.callee_func},
                {"call_seq", r.call_seq.to_string()},
                {"args", args},
                {"gas", r.gas},
                {"gas_price", r.gas_price},
                {"success", r.success}};
}

CallRecord decode_call(const Json& j) {
    if (!j.is_object()) throw DecodeError("record must be a JSON object");
    CallRecord r;
    r.txid = req_string(j, "txid");
    if (r.txid.empty()) throw DecodeError("field 'txid' is empty");
    r.block = req_uint(j, "block");
    std::uint64_t idx = req_uint(j, "tx_index");
    if (idx > UINT32_MAX) throw DecodeError("field 'tx_index' out of range");
    r.tx_index = static_cast<std::uint32_t>(idx);
    if (j.contains("chain") && !j["chain"].is_null()) {
        r.chain.value = req_string(j, "chain");
        if (r.chain.value.empty()) throw DecodeError("field 'chain' is empty");
    }
    r.caller = req_account(j, "caller");
    r.callee_contract = req_account(j, "callee_contract");
    r.callee_func = req_string(j, "callee_func");
    r.call_seq = req_seq(j, "call_seq");
    if (j.contains("args") && !j["args"].is_null()) {
        const Json& a = j["args"];
        if (!a.is_object()) throw DecodeError("field 'args' must be an object");
        for (auto it = a.begin(); it != a.end(); ++it) r.args.emplace(it.key(), decode_arg(it.value()));
    }
    r.gas = opt_uint(j, "gas", 0);
    r.gas_price = opt_uint(j, "gas_price", 0);
    if (j.contains("success") && !j["success"].is_null()) {
        if (!j["success"].is_boolean()) throw DecodeError("field 'success' must be a boolean");
        r.success = j["success"].get<bool>();
    }
    return r;
}

Json encode(const Transfer& t) {
    return Json{{"sender", t.sender.str()}, {"receiver", t.receiver.str()}, {"token", t.token.str()},
                {"value", t.value},         {"chain", t.chain.value},        {"data", t.data},
                {"txid", t.txid}};
}

Transfer decode_transfer(const Json& j) {
    Transfer t;
    t.sender = req_account(j, "sender");
    t.receiver = req_account(j, "receiver");
    t.token = req_account(j, "token");
    t.value = req_uint(j, "value");
    t.chain.value = req_string(j, "chain");
    t.data = j.value("data", std::string{});
    t.txid = req_string(j, "txid");
    return t;
}

Json encode(const DepositRecord& d) {
    return Json{{"txid", d.txid},
                {"block", d.block},
                {"tx_index", d.tx_index},
                {"call_seq", d.call_seq.to_string()},
                {"depositor", d.depositor.str()},
                {"pool", d.pool.str()},
                {"token", d.token.str()},
                {"value", d.value},
                {"origin_func", to_string(d.origin_func)}};
}

DepositRecord decode_deposit(const Json& j) {
    DepositRecord d;
    d.txid = req_string(j, "txid");
    d.block = req_uint(j, "block");
    d.tx_index = static_cast<std::uint32_t>(req_uint(j, "tx_index"));
    d.call_seq = req_seq(j, "call_seq");
    d.depositor = req_account(j, "depositor");
    d.pool = req_account(j, "pool");
    d.token = req_account(j, "token");
    d.value = req_uint(j, "value");
    d.origin_func = parse_deposit_origin(req_string(j, "origin_func"));
    return d;
}

Json encode(const WithdrawalRecord& w) {
    return Json{{"txid", w.txid},
                {"block", w.block},
                {"tx_index", w.tx_index},
                {"call_seq", w.call_seq.to_string()},
                {"withdrawer", w.withdrawer.str()},
                {"pool", w.pool.str()},
                {"token_in", w.token_in.str()},
                {"token_out", w.token_out.str()},
                {"value_out", w.value_out},
                {"expected_value_in", w.expected_value_in},
                {"origin_func", to_string(w.origin_func)}};
}

WithdrawalRecord decode_withdrawal(const Json& j) {
    WithdrawalRecord w;
    w.txid = req_string(j, "txid");
    w.block = req_uint(j, "block");
    w.tx_index = static_cast<std::uint32_t>(req_uint(j, "tx_index"));
    w.call_seq = req_seq(j, "call_seq");
    w.withdrawer = req_account(j, "withdrawer");
    w.pool = req_account(j, "pool");
    w.token_in = opt_account(j, "token_in");
    w.token_out = opt_account(j, "token_out");
    w.value_out = req_uint(j, "value_out");
    w.expected_value_in = req_uint(j, "expected_value_in");
    w.origin_func = parse_withdrawal_origin(req_string(j, "origin_func"));
    return w;
}

}  // namespace atomscan
