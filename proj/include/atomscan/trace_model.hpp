#pragma once

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <tuple>
#include <variant>
#include <vector>

#include <json.hpp>

#include "atomscan/rational.hpp"

namespace atomscan {

using Json = nlohmann::ordered_json;
using Amount = std::uint64_t;

class AccountId {
public:
    AccountId() = default;
    // Lowercases and adds a 0x prefix when missing. Throws on empty input.
    explicit AccountId(std::string_view text);

    const std::string& str() const { return value_; }
    bool empty() const { return value_.empty(); }

    auto operator<=>(const AccountId&) const = default;

private:
    std::string value_;
};

struct ChainId {
    std::string value = "eth";
    auto operator<=>(const ChainId&) const = default;
};

class CallSeq {
public:
    CallSeq() = default;
    explicit CallSeq(std::vector<std::uint32_t> segments);

    // "0.3.2"
    static CallSeq parse(std::string_view dotted);
    // "032", one digit per level.
    static CallSeq from_digits(std::string_view digits);

    const std::vector<std::uint32_t>& segments() const { return segs_; }
    std::size_t depth() const { return segs_.size(); }
    std::string to_string() const;

    auto operator<=>(const CallSeq&) const = default;

private:
    std::vector<std::uint32_t> segs_;
};

bool is_prefix_call(const CallSeq& parent, const CallSeq& child);

using ArgValue = std::variant<bool, std::int64_t, std::uint64_t, std::string>;
using ArgMap = std::map<std::string, ArgValue>;

struct Transfer {
    AccountId sender;
    AccountId receiver;
    AccountId token;
    Amount value = 0;
    ChainId chain;
    std::string data;
    std::string txid;
};

struct StreamKey {
    std::uint64_t block = 0;
    std::uint32_t tx_index = 0;
    CallSeq call_seq;
    auto operator<=>(const StreamKey&) const = default;
};

// Stream order of two records without building StreamKey copies.
template <typename A, typename B>
bool key_less(const A& a, const B& b) {
    return std::tie(a.block, a.tx_index, a.call_seq) < std::tie(b.block, b.tx_index, b.call_seq);
}

struct CallRecord {
    std::string txid;
    std::uint64_t block = 0;
    std::uint32_t tx_index = 0;
    ChainId chain;
    AccountId caller;
    AccountId callee_contract;
    std::string callee_func;
    CallSeq call_seq;
    ArgMap args;
    std::uint64_t gas = 0;
    std::uint64_t gas_price = 0;
    bool success = true;

    StreamKey key() const { return {block, tx_index, call_seq}; }

    std::optional<Amount> arg_amount(const std::string& name) const;
    std::optional<std::string> arg_string(const std::string& name) const;
    std::optional<AccountId> arg_account(const std::string& name) const;

    bool operator==(const CallRecord&) const = default;
};

std::strong_ordering stream_order(const CallRecord& a, const CallRecord& b);

enum class DepositOrigin { Transfer, TransferFrom, MintSide };
enum class WithdrawalOrigin { Swap, Mint, Burn };

struct DepositRecord {
    AccountId depositor;
    AccountId pool;
    AccountId token;
    Amount value = 0;
    std::string txid;
    std::uint64_t block = 0;
    std::uint32_t tx_index = 0;
    CallSeq call_seq;
    DepositOrigin origin_func = DepositOrigin::Transfer;

    StreamKey key() const { return {block, tx_index, call_seq}; }
    bool operator==(const DepositRecord&) const = default;
};

struct WithdrawalRecord {
    AccountId withdrawer;
    AccountId pool;
    // Empty for mint, where both pool tokens are consumed.
    AccountId token_in;
    AccountId token_out;
    Amount value_out = 0;
    Amount expected_value_in = 0;
    std::string txid;
    std::uint64_t block = 0;
    std::uint32_t tx_index = 0;
    CallSeq call_seq;
    WithdrawalOrigin origin_func = WithdrawalOrigin::Swap;

    StreamKey key() const { return {block, tx_index, call_seq}; }
    bool operator==(const WithdrawalRecord&) const = default;
};

enum class ViolationKind {
    I_StandaloneWithdrawal,
    II_StandaloneDeposit,
    III_AccountMismatch,
    IV_LowerValueDeposit,
    V_HigherValueDeposit,
    Interleaved,
};

enum class AnomalyClass { A_Atomic, U_Underwater, F_Freerider, D_Discount, O_Overcharge };

// Source of a profitable deposit.
enum class DepositPattern { P1_NonStandardBalance, P2_Interest, P3_ExternalTransfer, P4_BuggyRouter, Unknown };

std::optional<AnomalyClass> anomaly_for(ViolationKind kind);
std::optional<ViolationKind> kind_for(AnomalyClass cls);

std::string to_string(ViolationKind kind);    // "I" .. "V", "Interleaved"
std::string to_string(AnomalyClass cls);      // "A", "U", "F", "D", "O"
std::string to_string(DepositOrigin origin);  // "transfer", "transferFrom", "mint-side"
std::string to_string(WithdrawalOrigin origin);
std::string to_string(DepositPattern p);      // "P1" .. "P4", "Unknown"
DepositPattern parse_deposit_pattern(std::string_view text);
ViolationKind parse_violation_kind(std::string_view text);
AnomalyClass parse_anomaly_class(std::string_view text);
DepositOrigin parse_deposit_origin(std::string_view text);
WithdrawalOrigin parse_withdrawal_origin(std::string_view text);

class DecodeError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Json encode(const ArgValue& v);
ArgValue decode_arg(const Json& j);
Json encode(const CallRecord& r);
CallRecord decode_call(const Json& j);
Json encode(const Transfer& t);
Transfer decode_transfer(const Json& j);
Json encode(const DepositRecord& d);
DepositRecord decode_deposit(const Json& j);
Json encode(const WithdrawalRecord& w);
WithdrawalRecord decode_withdrawal(const Json& j);

}  // namespace atomscan

template <>
struct std::hash<atomscan::AccountId> {
    std::size_t operator()(const atomscan::AccountId& a) const noexcept { return std::hash<std::string>{}(a.str()); }
};
