#pragma once

#include "mfiv/mfiv.hpp"
#include "mfiv/report.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <future>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

namespace mfiv::cli {

enum ExitCode : int {
    kOk = 0,
    kValidation = 2,
    kDivergence = 3,
    kBenchmarkFailed = 4,
    kIoError = 5,
};

struct RunConfig {
    std::string input;
    std::string command;
    int target_days = 30;
    bool apply_filter = true;
    std::string format = "json";
    int grid = 100;
    bool certificates = false;
    bool deep = false;
};

using report::Json;

/// Runs `fn` on every snapshot concurrently; results keep input order.
template <class Fn>
auto map_snapshots(const std::vector<MarketSnapshot>& snaps, Fn fn) {
    using R = decltype(fn(snaps.front()));
    std::vector<std::future<R>> jobs;
    jobs.reserve(snaps.size());
    for (const MarketSnapshot& s : snaps) jobs.push_back(std::async(std::launch::async, fn, std::cref(s)));
    std::vector<R> out;
    out.reserve(snaps.size());
    for (auto& j : jobs) out.push_back(j.get());
    return out;
}

/// Positions of the two maturities used for interpolation: the latest at or
/// before the target and the earliest after it, falling back to the two
/// nearest on one side. Empty when fewer than two distinct maturities exist.
inline std::optional<std::pair<std::size_t, std::size_t>> pick_maturities(const std::vector<MarketSnapshot>& snaps,
                                                                          int target_days,
                                                                          const IndexConventions& conv = {}) {
    std::vector<std::size_t> order(snaps.size());
    for (std::size_t n = 0; n < order.size(); ++n) order[n] = n;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return snaps[a].maturity < snaps[b].maturity; });
    std::vector<std::size_t> distinct;
    for (std::size_t n : order)
        if (distinct.empty() || snaps[distinct.back()].maturity != snaps[n].maturity) distinct.push_back(n);
    if (distinct.size() < 2) return std::nullopt;

    const double target = target_days / conv.days_per_year;
    std::size_t after = 0;
    while (after < distinct.size() && snaps[distinct[after]].maturity.to_double() <= target) ++after;
    if (after == 0) return std::pair{distinct[0], distinct[1]};
    if (after == distinct.size()) return std::pair{distinct[after - 2], distinct[after - 1]};
    return std::pair{distinct[after - 1], distinct[after]};
}

inline std::string format_double(double v) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, end);
}

inline void emit(std::ostream& out, const Json& doc) { out << doc.dump(2) << '\n'; }

// ---------------------------------------------------------------------------

inline int cmd_validate(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    bool failed = false;
    Json records = Json::array();
    for (const MarketSnapshot& s : snaps) {
        Json rec{{"label", s.label}, {"maturity", report::number(s.maturity)}, {"discount", report::number(s.discount)}};
        for (Side side : {Side::Put, Side::Call}) {
            const QuoteChain& chain = s.chain(side);
            const ValidationReport structural = validate_chain(chain);
            Json section{{"structural", report::chain_violations(structural)}};
            failed = failed || !structural.empty();
            if ((cfg.deep || cfg.certificates) && structural.empty()) {
                const auto violations = check_necessary_conditions(chain, s.discount, side);
                Json arr = Json::array();
                for (const Violation& v : violations) arr.push_back(report::violation(v, chain));
                section["arbitrage"] = arr;
                failed = failed || !violations.empty();
                if (cfg.certificates) {
                    Json certs = Json::array();
                    for (const Violation& v : violations) certs.push_back(report::certificate(certificate_for(v, chain, s.discount), chain));
                    section["certificates"] = certs;
                }
            }
            rec[side == Side::Put ? "put" : "call"] = section;
        }
        records.push_back(rec);
    }
    emit(out, Json{{"command", "validate"}, {"valid", !failed}, {"snapshots", records}});
    return failed ? kValidation : kOk;
}

/// Structural problems make every computing command stop with exit code 2.
inline bool structurally_valid(const std::vector<MarketSnapshot>& snaps, std::ostream& err) {
    bool ok = true;
    for (const MarketSnapshot& s : snaps)
        for (Side side : {Side::Put, Side::Call})
            for (const ChainViolation& v : validate_chain(s.chain(side))) {
                err << "invalid quotes in '" << s.label << "' (" << to_string(side) << "): " << v.message << '\n';
                ok = false;
            }
    return ok;
}

inline VarianceOptions variance_options(const RunConfig& cfg) {
    VarianceOptions o;
    o.apply_filter = cfg.apply_filter;
    return o;
}

inline int cmd_curve(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    const auto results = map_snapshots(snaps, [&](const MarketSnapshot& s) { return expected_qv(s, variance_options(cfg)); });

    struct Row {
        Rational k;
        Rational value;
        std::string tag;
    };
    auto dump = [&](const PiecewiseLinearCurve& curve, const Rational& top) {
        std::vector<Rational> ks = curve.breakpoints();
        for (int g = 0; g < cfg.grid; ++g) ks.push_back(top * g / (cfg.grid - 1));
        std::sort(ks.begin(), ks.end());
        ks.erase(std::unique(ks.begin(), ks.end()), ks.end());
        std::vector<Row> rows;
        for (const Rational& k : ks) rows.push_back({k, curve.value_at(k), curve.line_at(k).tag.to_string()});
        return rows;
    };

    Json records = Json::array();
    if (cfg.format == "csv") out << "label,side,K,value,segment_tag\n";
    for (std::size_t n = 0; n < snaps.size(); ++n) {
        const MarketSnapshot& s = snaps[n];
        const Decimal k_max = std::max(s.put_chain.quotes.back().strike, s.call_chain.quotes.back().strike);
        const Rational top = k_max.to_rational() * 3 / 2;
        const MaturityVariance& mv = results[n];
        for (Side side : {Side::Put, Side::Call}) {
            const PiecewiseLinearCurve& curve = side == Side::Put ? mv.put.curve : mv.call.curve;
            const std::vector<Row> rows = dump(curve, top);
            if (cfg.format == "csv") {
                for (const Row& r : rows)
                    out << s.label << ',' << to_string(side) << ',' << format_double(to_double(r.k)) << ','
                        << format_double(to_double(r.value)) << ',' << r.tag << '\n';
                continue;
            }
            Json points = Json::array();
            for (const Row& r : rows)
                points.push_back(Json{{"K", report::number(r.k)}, {"value", report::number(r.value)}, {"segment_tag", r.tag}});
            Json lines = Json::array();
            for (const auto& seg : curve.segments())
                lines.push_back(Json{{"from", report::number(seg.start)}, {"line", report::line(seg.line)}});
            Json rec{{"label", s.label}, {"side", to_string(side)},
                     {"case", to_string(side == Side::Put ? mv.put.case_taken : mv.call.case_taken)},
                     {"segments", lines}, {"points", points}};
            const auto& div = side == Side::Put ? mv.put.divergence : mv.call.divergence;
            if (div) rec["diverged_reason"] = div->reason();
            if (side == Side::Put) rec["excluded_strikes"] = report::strikes(mv.excluded_strikes);
            records.push_back(rec);
        }
    }
    if (cfg.format == "json") emit(out, Json{{"command", "curve"}, {"curves", records}});
    return kOk;
}

inline std::optional<double> finite_variance(const MaturityVariance& mv) {
    if (mv.diverged()) return std::nullopt;
    return mv.total_variance.value;
}

inline int cmd_index(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    const auto results = map_snapshots(snaps, [&](const MarketSnapshot& s) { return expected_qv(s, variance_options(cfg)); });
    Json records = Json::array();
    bool diverged = false;
    for (const MaturityVariance& mv : results) {
        records.push_back(report::maturity_variance(mv));
        diverged = diverged || mv.diverged();
    }
    Json doc{{"command", "index"}, {"filter", cfg.apply_filter}, {"maturities", records}};
    if (auto pick = pick_maturities(snaps, cfg.target_days)) {
        const IndexResult idx = interpolate_index(results[pick->first], results[pick->second], cfg.target_days);
        Json j = report::index(idx);
        j["near"] = snaps[pick->first].label;
        j["next"] = snaps[pick->second].label;
        doc["index"] = j;
    } else {
        doc["index"] = Json{{"target_days", cfg.target_days}, {"failed_reason", "need two distinct maturities"}};
    }
    emit(out, doc);
    return diverged ? kDivergence : kOk;
}

inline int cmd_benchmark(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    const auto results = map_snapshots(snaps, [](const MarketSnapshot& s) { return benchmark_variance(s); });
    Json records = Json::array();
    bool failed = false;
    for (const BenchmarkResult& b : results) {
        records.push_back(report::benchmark(b));
        failed = failed || b.failed.has_value();
    }
    Json doc{{"command", "benchmark"}, {"maturities", records}};
    if (auto pick = pick_maturities(snaps, cfg.target_days)) {
        const BenchmarkIndexResult idx = benchmark_index(snaps[pick->first], snaps[pick->second], cfg.target_days);
        Json j = report::index(idx.index);
        j["near"] = idx.near.label;
        j["next"] = idx.next.label;
        doc["index"] = j;
    } else {
        doc["index"] = Json{{"target_days", cfg.target_days}, {"failed_reason", "need two distinct maturities"}};
    }
    emit(out, doc);
    return failed ? kBenchmarkFailed : kOk;
}

inline int cmd_compare(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    struct Both {
        MaturityVariance proposed;
        BenchmarkResult bench;
    };
    const auto results = map_snapshots(snaps, [&](const MarketSnapshot& s) {
        return Both{expected_qv(s, variance_options(cfg)), benchmark_variance(s)};
    });

    Json records = Json::array();
    for (const Both& r : results) {
        Json bench{{"V", nullptr}};
        if (r.bench.failed) {
            bench.erase("V");
            bench["failed_reason"] = *r.bench.failed;
            bench["failed_stage"] = *r.bench.failed_stage;
        } else {
            bench["V"] = report::number(r.bench.total_variance);
            bench["K_star"] = report::number(r.bench.eligible.k_star);
        }
        if (r.bench.forward) bench["F0"] = report::number(*r.bench.forward);

        Json prop = Json::object();
        if (r.proposed.diverged())
            prop["diverged_reason"] = r.proposed.divergence_reason();
        else
            prop["V"] = report::number(r.proposed.total_variance.value);
        prop["excluded_strikes"] = report::strikes(r.proposed.excluded_strikes);

        std::optional<double> bv;
        if (!r.bench.failed) bv = r.bench.total_variance;
        records.push_back(Json{{"label", r.proposed.label},
                               {"maturity", report::number(r.proposed.maturity)},
                               {"benchmark", bench},
                               {"proposed", prop},
                               {"relative_divergence", report::relative_divergence(finite_variance(r.proposed), bv)}});
    }

    Json doc{{"command", "compare"}, {"maturities", records}};
    if (auto pick = pick_maturities(snaps, cfg.target_days)) {
        const auto& near = results[pick->first];
        const auto& next = results[pick->second];
        const IndexResult prop = interpolate_index(near.proposed, next.proposed, cfg.target_days);
        const BenchmarkIndexResult bench = benchmark_index(snaps[pick->first], snaps[pick->second], cfg.target_days);
        doc["index"] = Json{{"near", snaps[pick->first].label},
                            {"next", snaps[pick->second].label},
                            {"benchmark", report::index(bench.index)},
                            {"proposed", report::index(prop)},
                            {"relative_divergence", report::relative_divergence(prop.index_level, bench.index.index_level)}};
    }
    emit(out, doc);
    return kOk;
}

inline int cmd_filter(const std::vector<MarketSnapshot>& snaps, const RunConfig& cfg, std::ostream& out) {
    Json records = Json::array();
    bool diverged = false;
    for (const MarketSnapshot& s : snaps) {
        Json rec{{"label", s.label}};
        const PutCurveResult before = construct_put_curve(s.put_chain, s.discount);
        rec["diverged_before"] = before.diverges();
        if (before.classification.M_members.empty()) {
            rec["applicable"] = false;
            rec["excluded_strikes"] = Json::array();
            diverged = diverged || before.diverges();
        } else {
            rec["applicable"] = true;
            FilterResult fr;
            try {
                fr = filter_anomalies(s.put_chain, s.discount);
            } catch (const FilterError& e) {
                fr = e.partial();
                rec["error"] = e.what();
            }
            rec["passes"] = fr.passes;
            rec["excluded_strikes"] = report::strikes(fr.excluded_strikes);
            if (fr.result.f0) rec["f0"] = report::line(*fr.result.f0);
            rec["diverged_after"] = fr.result.diverges();
            if (fr.result.divergence) rec["diverged_reason"] = fr.result.divergence->reason();
            diverged = diverged || fr.result.diverges();
        }
        records.push_back(rec);
    }
    emit(out, Json{{"command", "filter"}, {"snapshots", records}});
    return diverged ? kDivergence : kOk;
}

// ---------------------------------------------------------------------------

inline int execute(const RunConfig& cfg, std::ostream& out, std::ostream& err) {
    std::ifstream in(cfg.input, std::ios::binary);
    if (!in) {
        err << "error: cannot read input '" << cfg.input << "'\n";
        return kIoError;
    }
    std::stringstream buf;
    buf << in.rdbuf();

    std::vector<MarketSnapshot> snaps;
    try {
        snaps = parse_snapshot(buf.str());
    } catch (const QuoteValidationError& e) {
        err << "invalid quotes: " << e.what() << '\n';
        return kValidation;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return kIoError;
    }
    if (snaps.empty()) {
        err << "error: input contains no quotes\n";
        return kIoError;
    }

    if (cfg.command == "validate") return cmd_validate(snaps, cfg, out);
    if (!structurally_valid(snaps, err)) return kValidation;
    if (cfg.command == "curve") return cmd_curve(snaps, cfg, out);
    if (cfg.command == "index") return cmd_index(snaps, cfg, out);
    if (cfg.command == "benchmark") return cmd_benchmark(snaps, cfg, out);
    if (cfg.command == "compare") return cmd_compare(snaps, cfg, out);
    if (cfg.command == "filter") return cmd_filter(snaps, cfg, out);
    err << "error: unknown command '" << cfg.command << "'\n";
    return kValidation;
}

/// Parses argv and runs the selected command. Usage errors exit with 2.
inline int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig cfg;
    CLI::App app{"Arbitrage-free option price curves and model-free implied volatility index"};
    app.add_option("--input", cfg.input, "Quote CSV (label,maturity_years,discount,side,strike,bid,ask)")->required();
    app.add_option("--command", cfg.command, "validate | curve | index | benchmark | compare | filter")
        ->required()
        ->check(CLI::IsMember({"validate", "curve", "index", "benchmark", "compare", "filter"}));
    app.add_option("--target-days", cfg.target_days, "Index horizon in days")->check(CLI::Range(1, 100000));
    bool no_filter = false;
    app.add_flag("--no-filter", no_filter, "Disable the anomaly filter");
    app.add_option("--format", cfg.format, "json | csv (csv applies to curve dumps)")
        ->check(CLI::IsMember({"json", "csv"}));
    app.add_option("--grid", cfg.grid, "Grid points per curve dump")->check(CLI::Range(2, 1000000));
    app.add_flag("--certificates", cfg.certificates, "Attach arbitrage certificates (validate)");
    app.add_flag("--deep", cfg.deep, "Check necessary no-arbitrage conditions (validate)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    }
    cfg.apply_filter = !no_filter;
    return execute(cfg, out, err);
}

}  // namespace mfiv::cli
