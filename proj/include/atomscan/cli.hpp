#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "atomscan/ingest.hpp"
#include "atomscan/matchmaker.hpp"

namespace atomscan {

// Runs the matchmaker on every UniswapV2Like pool, `jobs` pools at a time.
std::map<AccountId, DetectionReport> detect_all(const std::vector<CallRecord>& records, const PoolRegistry& registry,
                                                const MatchParams& params, unsigned jobs = 1);

namespace cli {

inline constexpr int kOk = 0;
inline constexpr int kInputError = 1;
inline constexpr int kInternalError = 2;

// args excludes the program name: {"detect", "--trace", "t.jsonl", ...}.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cli
}  // namespace atomscan
