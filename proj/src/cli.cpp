#include "atomscan/cli.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include "atomscan/amm_sim.hpp"
#include "atomscan/attack_detect.hpp"
#include "atomscan/crosschain.hpp"
#include "atomscan/lost_tokens.hpp"
#include "atomscan/oracle.hpp"
#include "atomscan/violations.hpp"

namespace atomscan {

std::map<AccountId, DetectionReport> detect_all(const std::vector<CallRecord>& records, const PoolRegistry& registry,
                                                const MatchParams& params, unsigned jobs) {
    params.validate();
    auto candidates = extract_all(records, registry);
    std::vector<const std::pair<const AccountId, Candidates>*> work;
    for (const auto& e : candidates) work.push_back(&e);
    std::vector<DetectionReport> reports(work.size());

    auto one = [&](std::size_t i) {
        reports[i] = run_matchmaker(work[i]->second.deposits, work[i]->second.withdrawals, params);
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(work.size())));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < work.size(); ++i) one(i);
    } else {
        std::atomic<std::size_t> next{0};
        std::exception_ptr failure;
        std::mutex failure_mu;
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) {
            pool.emplace_back([&] {
                for (std::size_t i; (i = next.fetch_add(1)) < work.size();) {
                    try {
                        one(i);
                    } catch (...) {
                        std::lock_guard<std::mutex> lock(failure_mu);
                        if (!failure) failure = std::current_exception();
                    }
                }
            });
        }
        for (auto& th : pool) th.join();
        if (failure) std::rethrow_exception(failure);
    }
    std::map<AccountId, DetectionReport> out;
    for (std::size_t i = 0; i < work.size(); ++i) out.emplace(work[i]->first, std::move(reports[i]));
    return out;
}

namespace cli {

namespace {

namespace fs = std::filesystem;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::vector<std::string> traces;
    std::string registry;
    std::string rates;
    std::string params;
    std::string out_dir = "atomscan_out";
    std::string format = "json";
    std::string tolerance = "10";
    int max_group = 2;
    std::uint64_t timeout_blocks = 6646;
    std::size_t quorum = 3;
    std::uint64_t seed = 1;
    std::uint64_t horizon = 3000;
    std::string preset = "mixed";
    std::string scenario;
    std::string input;
    std::vector<std::string> privileged;
    bool oracle_compare = false;
    bool tolerant = false;
    bool median = false;
    unsigned jobs = 1;
};

MatchParams match_params(const Options& o) {
    MatchParams p;
    try {
        p.tolerance_pct = Rational::parse(o.tolerance);
    } catch (const std::exception& e) {
        throw InputError("--tolerance-pct: " + std::string(e.what()));
    }
    p.max_group = o.max_group;
    p.timeout_blocks = o.timeout_blocks;
    try {
        p.validate();
    } catch (const std::invalid_argument& e) {
        throw InputError(e.what());
    }
    return p;
}

void require_file(const std::string& path, const char* flag) {
    if (path.empty()) throw InputError(std::string(flag) + " is required");
    if (!fs::is_regular_file(path)) throw InputError(std::string(flag) + ": no such file " + path);
}

std::vector<CallRecord> load_traces(const Options& o) {
    if (o.traces.empty()) throw InputError("--trace is required");
    std::vector<CallRecord> all;
    for (const auto& t : o.traces) {
        require_file(t, "--trace");
        auto recs = parse_trace_file(t);
        all.insert(all.end(), std::make_move_iterator(recs.begin()), std::make_move_iterator(recs.end()));
    }
    if (o.traces.size() > 1)
        std::stable_sort(all.begin(), all.end(), [](const CallRecord& a, const CallRecord& b) { return a.key() < b.key(); });
    return all;
}

PoolRegistry load_registry(const Options& o) {
    require_file(o.registry, "--registry");
    return PoolRegistry::load(o.registry);
}

fs::path out_dir(const Options& o) {
    fs::path d(o.out_dir);
    std::error_code ec;
    fs::create_directories(d, ec);
    if (ec || !fs::is_directory(d)) throw InputError("--out: cannot create directory " + o.out_dir);
    return d;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream f(p, std::ios::binary | std::ios::trunc);
    if (!f) throw InputError("cannot write " + p.string());
    f << content;
}

Json reports_json(const std::map<AccountId, DetectionReport>& reports, const MatchParams& p) {
    Json pools = Json::array();
    for (const auto& [pool, r] : reports) pools.push_back(Json{{"pool", pool.str()}, {"report", to_json(r)}});
    return Json{{"params",
                 {{"tolerance_pct", p.tolerance_pct.to_string()},
                  {"max_group", p.max_group},
                  {"timeout_blocks", p.timeout_blocks}}},
                {"pools", pools}};
}

DetectionReport merged(const std::map<AccountId, DetectionReport>& reports) {
    DetectionReport all;
    for (const auto& [pool, r] : reports) {
        all.matches.insert(all.matches.end(), r.matches.begin(), r.matches.end());
        all.violations.insert(all.violations.end(), r.violations.begin(), r.violations.end());
    }
    return all;
}

int cmd_detect(const Options& o, std::ostream& out) {
    MatchParams p = match_params(o);
    auto records = load_traces(o);
    auto registry = load_registry(o);
    std::optional<RateTable> rates;
    if (!o.rates.empty()) {
        require_file(o.rates, "--rates");
        rates = RateTable::load_csv(o.rates);
    }
    auto reports = detect_all(records, registry, p, o.jobs);
    for (const auto& [pool, r] : reports)
        if (auto bad = validate_report(r, p)) throw std::logic_error("report check failed on " + pool.str() + ": " + *bad);

    SummaryTable summary = aggregate(merged(reports), rates ? &*rates : nullptr);
    fs::path dir = out_dir(o);
    write_file(dir / "report.json", reports_json(reports, p).dump(2) + "\n");
    if (o.format == "csv")
        write_file(dir / "summary.csv", to_csv(summary));
    else
        write_file(dir / "summary.json", to_json(summary).dump(2) + "\n");

    std::size_t matches = 0;
    for (const auto& [pool, r] : reports) matches += r.matches.size();
    out << "pools " << reports.size() << ", records " << records.size() << ", matches " << matches
        << ", violations " << summary.total_count() << "\n";
    for (const auto& row : summary.rows)
        if (row.kind != "Atomic" && row.count) out << "  " << row.kind << ": " << row.count << "\n";

    if (o.oracle_compare) {
        long delta = 0;
        std::size_t windows = 0, skipped = 0, differing = 0;
        for (const auto& [pool, c] : extract_all(records, registry)) {
            for (const auto& w : split_windows(c.deposits, c.withdrawals, 8)) {
                try {
                    OracleResult orc = exhaustive_match(w.deposits, w.withdrawals, p);
                    DetectionReport g = run_matchmaker(w.deposits, w.withdrawals, p);
                    Diff d = compare_with_oracle(g, orc);
                    delta += d.violation_delta;
                    if (!d.empty()) ++differing;
                    ++windows;
                } catch (const WindowTooLarge&) {
                    ++skipped;
                }
            }
        }
        out << "oracle windows " << windows << ", skipped " << skipped << ", differing " << differing << "\n";
        out << "violation_delta " << delta << "\n";
    }
    return kOk;
}

int cmd_simulate(const Options& o, std::ostream& out) {
    Scenario s;
    if (!o.scenario.empty()) {
        require_file(o.scenario, "--scenario");
        std::ifstream in(o.scenario);
        s = Scenario::from_json(Json::parse(in));
    } else if (o.preset == "mixed") {
        s = mixed_scenario(o.seed, o.horizon);
    } else if (o.preset == "strategy") {
        s = strategy_scenario(o.seed);
    } else {
        throw InputError("--preset must be mixed or strategy");
    }
    SimulationResult r = simulate(s);
    fs::path dir = out_dir(o);
    std::ostringstream trace;
    write_trace(trace, r.trace);
    write_file(dir / "trace.jsonl", trace.str());
    std::string labels;
    for (const auto& l : r.labels) labels += to_json(l).dump() + "\n";
    write_file(dir / "labels.jsonl", labels);
    write_file(dir / "registry.json", r.registry.to_json().dump(2) + "\n");
    write_file(dir / "scenario.json", s.to_json().dump(2) + "\n");

    std::map<std::string, std::size_t> counts;
    for (const auto& l : r.labels) ++counts[to_string(l.category)];
    out << "records " << r.trace.size() << ", labels " << r.labels.size() << "\n";
    for (const auto& [k, n] : counts) out << "  " << k << ": " << n << "\n";
    return kOk;
}

int cmd_indicators(const Options& o, std::ostream& out) {
    MatchParams p = match_params(o);
    DetectionParams dp;
    if (!o.params.empty()) {
        require_file(o.params, "--params");
        dp = DetectionParams::load(o.params);
    }
    auto records = load_traces(o);
    auto registry = load_registry(o);
    auto reports = detect_all(records, registry, p, o.jobs);
    TraceIndex index(records, registry);
    auto risky = collect_risky(reports, index);
    IndicatorOptions io;
    io.use_median = o.median;
    auto vectors = compute_all(risky, io);

    fs::path dir = out_dir(o);
    if (o.format == "json") {
        Json rows = Json::array();
        for (const auto& v : vectors) {
            AccountLabel l = classify_account(v, dp);
            Json j = to_json(v);
            j["label"] = to_string(l.kind);
            j["fired"] = std::vector<std::string>(l.fired.begin(), l.fired.end());
            rows.push_back(std::move(j));
        }
        write_file(dir / "indicators.json", rows.dump(2) + "\n");
    } else {
        write_file(dir / "indicators.csv", indicators_csv(vectors, dp));
    }
    std::size_t attackers = 0;
    for (const auto& v : vectors) {
        AccountLabel l = classify_account(v, dp);
        if (l.attacker()) {
            ++attackers;
            out << "  " << v.account.str() << " " << to_string(l.kind) << "\n";
        }
    }
    out << "accounts " << vectors.size() << ", attackers " << attackers << "\n";
    return kOk;
}

int cmd_lost(const Options& o, std::ostream& out) {
    MatchParams p = match_params(o);
    auto records = load_traces(o);
    auto registry = load_registry(o);
    std::optional<RateTable> rates;
    if (!o.rates.empty()) {
        require_file(o.rates, "--rates");
        rates = RateTable::load_csv(o.rates);
    }
    std::set<AccountId> privileged;
    for (const auto& a : o.privileged) privileged.insert(AccountId(a));
    LostOptions lo;
    lo.tolerant = o.tolerant;
    lo.tolerance_pct = p.tolerance_pct;

    auto candidates = extract_all(records, registry);
    auto reports = detect_all(records, registry, p, o.jobs);
    std::vector<LostTokenFinding> findings;
    for (const auto& [pool, r] : reports) {
        auto f = detect_lost(r.violations, candidates.at(pool).deposits, records, privileged, registry,
                             rates ? &*rates : nullptr, lo);
        findings.insert(findings.end(), f.begin(), f.end());
    }
    fs::path dir = out_dir(o);
    write_file(dir / "lost_findings.csv", findings_csv(findings));
    LostAggregate a = aggregate_lost(findings);
    out << "lost findings " << a.count << ", total_usd " << a.total_usd.to_decimal(6) << ", unvalued " << a.unvalued
        << ", mean_block_diff " << (a.mean_block_diff ? a.mean_block_diff->to_decimal(2) : std::string("-")) << "\n";
    return kOk;
}

int cmd_crosschain(const Options& o, std::ostream& out) {
    if (o.quorum == 0) throw InputError("--quorum must be positive");
    auto records = load_traces(o);
    CrossChainOptions co;
    co.quorum = o.quorum;
    auto result = join_crosschain(extract_xtransfers(records), extract_reports(records), co);
    auto hist = delay_stats(result);
    fs::path dir = out_dir(o);
    write_file(dir / "crosschain.json", to_json(result).dump(2) + "\n");
    write_file(dir / "delay_histogram.csv", histogram_csv(hist));
    out << "matched " << result.matched.size() << ", underwater " << result.underwater.size() << ", orphans "
        << result.orphans.size() << "\n";
    out << "under 10 min " << hist.fraction_under(10).to_decimal(4) << ", negative delays " << hist.negative.size()
        << ", max delay " << (hist.max_delay ? std::to_string(*hist.max_delay) + " s" : std::string("-")) << "\n";
    return kOk;
}

int cmd_calibrate(const Options& o, std::ostream& out) {
    require_file(o.input, "--input");
    std::ifstream in(o.input);
    Json rows = Json::parse(in);
    if (!rows.is_array()) throw InputError("--input must hold a JSON array");
    std::vector<std::pair<IndicatorVector, bool>> labeled;
    for (const auto& r : rows) labeled.emplace_back(indicator_from_json(r), r.value("attacker", false));
    DetectionParams p;
    try {
        p = calibrate(labeled);
    } catch (const NoPositives& e) {
        throw InputError(e.what());
    } catch (const UncoverablePositive& e) {
        throw InputError(e.what());
    }
    std::string text = p.to_json().dump(2) + "\n";
    write_file(out_dir(o) / "params.json", text);
    out << text;
    return kOk;
}

void add_match_flags(CLI::App* sub, Options& o) {
    sub->add_option("--tolerance-pct", o.tolerance, "Value tolerance in percent (default 10)");
    sub->add_option("--max-group", o.max_group, "Maximum records per side of a group (default 2)");
    sub->add_option("--timeout-blocks", o.timeout_blocks, "Cross-transaction matching horizon in blocks");
    sub->add_option("--jobs", o.jobs, "Pools processed in parallel")->check(CLI::Range(1u, 256u));
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"atomscan: swap atomicity analysis over call traces"};
    app.set_config("--config", "", "key=value configuration file");
    app.require_subcommand(1, 1);

    auto* detect = app.add_subcommand("detect", "Match deposits and withdrawals, report violations");
    detect->add_option("--trace", o.traces, "Trace file (JSON lines)");
    detect->add_option("--registry", o.registry, "Pool registry JSON");
    detect->add_option("--rates", o.rates, "USD rate table CSV");
    detect->add_option("--out", o.out_dir, "Output directory");
    detect->add_option("--format", o.format, "Summary format")->check(CLI::IsMember({"json", "csv"}));
    detect->add_flag("--oracle-compare", o.oracle_compare, "Compare with exhaustive search per window");
    add_match_flags(detect, o);

    auto* sim = app.add_subcommand("simulate", "Generate a labeled synthetic trace");
    sim->add_option("--seed", o.seed, "Random seed");
    sim->add_option("--scenario", o.scenario, "Scenario JSON (overrides --preset)");
    sim->add_option("--preset", o.preset, "mixed or strategy")->check(CLI::IsMember({"mixed", "strategy"}));
    sim->add_option("--horizon", o.horizon, "Blocks for the mixed preset");
    sim->add_option("--out", o.out_dir, "Output directory");

    auto* ind = app.add_subcommand("indicators", "Per-account attack indicators and labels");
    ind->add_option("--trace", o.traces, "Trace file (JSON lines)");
    ind->add_option("--registry", o.registry, "Pool registry JSON");
    ind->add_option("--params", o.params, "Detection thresholds JSON");
    ind->add_option("--out", o.out_dir, "Output directory");
    ind->add_option("--format", o.format, "Output format")->check(CLI::IsMember({"json", "csv"}));
    ind->add_flag("--median", o.median, "Use the median instead of the mean for gap indicators");
    add_match_flags(ind, o);

    auto* lost = app.add_subcommand("lost", "Lost-token findings among standalone deposits");
    lost->add_option("--trace", o.traces, "Trace file (JSON lines)");
    lost->add_option("--registry", o.registry, "Pool registry JSON");
    lost->add_option("--rates", o.rates, "USD rate table CSV");
    lost->add_option("--privileged", o.privileged, "Account known to operate a pool (repeatable)");
    lost->add_flag("--tolerant", o.tolerant, "Accept retries within the value tolerance");
    lost->add_option("--out", o.out_dir, "Output directory");
    add_match_flags(lost, o);

    auto* cc = app.add_subcommand("crosschain", "Join xTransfer and reportTx calls");
    cc->add_option("--trace", o.traces, "Trace file, repeatable (source and destination chains)");
    cc->add_option("--quorum", o.quorum, "Distinct reporters required to mint (default 3)");
    cc->add_option("--out", o.out_dir, "Output directory");

    auto* cal = app.add_subcommand("calibrate", "Fit detection thresholds to labeled indicator vectors");
    cal->add_option("--input", o.input, "JSON array of indicator vectors with an 'attacker' flag");
    cal->add_option("--out", o.out_dir, "Output directory");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        int code = app.exit(e, out, err);
        return code == 0 ? kOk : kInputError;
    }

    try {
        if (detect->parsed()) return cmd_detect(o, out);
        if (sim->parsed()) return cmd_simulate(o, out);
        if (ind->parsed()) return cmd_indicators(o, out);
        if (lost->parsed()) return cmd_lost(o, out);
        if (cc->parsed()) return cmd_crosschain(o, out);
        if (cal->parsed()) return cmd_calibrate(o, out);
    } catch (const InputError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const IngestError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const DecodeError& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const InvalidScenario& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const Json::exception& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << "\n";
        return kInputError;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << "\n";
        return kInternalError;
    }
    err << "error: no subcommand\n";
    return kInputError;
}

}  // namespace cli
}  // namespace atomscan
