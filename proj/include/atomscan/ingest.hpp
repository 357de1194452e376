#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "atomscan/trace_model.hpp"

namespace atomscan {

enum class Protocol { UniswapV2Like, CrossChainEndpoint };

std::string to_string(Protocol p);
Protocol parse_protocol(std::string_view text);

struct PoolInfo {
    AccountId pool;
    AccountId token0;
    AccountId token1;
    Protocol protocol = Protocol::UniswapV2Like;
};

class PoolRegistry {
public:
    PoolRegistry() = default;
    explicit PoolRegistry(std::vector<PoolInfo> pools);

    static PoolRegistry from_json(const Json& j);
    static PoolRegistry load(const std::string& path);
    Json to_json() const;

    const std::vector<PoolInfo>& pools() const { return pools_; }
    const PoolInfo* find(const AccountId& pool) const;

private:
    std::vector<PoolInfo> pools_;
    std::map<AccountId, std::size_t> index_;
};

class IngestError : public std::runtime_error {
public:
    enum class Code { Io, MalformedLine, UnknownPool, MissingArg, BadRegistry };
    IngestError(Code code, std::string msg, std::size_t line_no = 0)
        : std::runtime_error(std::move(msg)), code_(code), line_no_(line_no) {}
    Code code() const { return code_; }
    std::size_t line_no() const { return line_no_; }

private:
    Code code_;
    std::size_t line_no_;
};

struct ParseStats {
    std::size_t lines = 0;
    std::size_t unknown_fields = 0;
};

// One JSON object per line; blank lines are skipped. Output is sorted by
// stream_order (stable for duplicate keys).
std::vector<CallRecord> parse_trace(std::istream& in, ParseStats* stats = nullptr);
std::vector<CallRecord> parse_trace_file(const std::string& path, ParseStats* stats = nullptr);

void write_trace(std::ostream& out, const std::vector<CallRecord>& records);

struct Candidates {
    std::vector<DepositRecord> deposits;
    std::vector<WithdrawalRecord> withdrawals;
};

// Successful calls only. Deposits: token0/token1 (and the pool's own LP
// token, for burns) transfer/transferFrom with the pool as receiver.
// Withdrawals: the pool's swap/mint/burn.
Candidates extract_candidates(const std::vector<CallRecord>& records, const PoolRegistry& registry,
                              const AccountId& pool);

// Same as above for every UniswapV2Like pool in one pass.
std::map<AccountId, Candidates> extract_all(const std::vector<CallRecord>& records, const PoolRegistry& registry);

}  // namespace atomscan
