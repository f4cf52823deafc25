#pragma once

// JSON records emitted by the command-line tool. Every number is finite;
// infinite results are written as a reason string instead.

#include "mfiv/arbitrage.hpp"
#include "mfiv/benchmark.hpp"
#include "mfiv/var_index.hpp"

#include "json.hpp"

#include <cmath>
#include <string>
#include <vector>

namespace mfiv::report {

using Json = nlohmann::ordered_json;

inline Json number(double v) { return std::isfinite(v) ? Json(v) : Json("non-finite"); }
inline Json number(const Rational& r) { return number(to_double(r)); }
inline Json number(Decimal d) { return Json(d.to_double()); }

inline Json strikes(const std::vector<Decimal>& ks) {
    Json arr = Json::array();
    for (Decimal k : ks) arr.push_back(number(k));
    return arr;
}

inline Json line(const Line& l) {
    return Json{{"tag", l.tag.to_string()}, {"slope", number(l.slope)}, {"intercept", number(l.intercept)}};
}

inline Json chain_violations(const ValidationReport& report) {
    Json arr = Json::array();
    for (const auto& v : report) arr.push_back(Json{{"kind", to_string(v.kind)}, {"index", v.index}, {"message", v.message}});
    return arr;
}

inline Json violation(const Violation& v, const QuoteChain& chain) {
    Json ks = Json::array();
    for (int i : v.indices) ks.push_back(number(chain[static_cast<std::size_t>(i)].strike));
    return Json{{"kind", to_string(v.kind)}, {"side", to_string(v.side)}, {"indices", v.indices}, {"strikes", ks}};
}

inline Json certificate(const ArbitrageCertificate& c, const QuoteChain& chain) {
    Json positions = Json::array();
    for (const Position& p : c.portfolio.positions) {
        const char* inst = p.instrument == InstrumentKind::Put ? "put" : p.instrument == InstrumentKind::Call ? "call" : "bond";
        Json j{{"instrument", inst}};
        if (p.instrument != InstrumentKind::Bond) j["strike"] = number(p.strike);
        j["quantity"] = number(p.quantity);
        positions.push_back(std::move(j));
    }
    Json witnesses = Json::array();
    for (const Rational& s : c.witness_states) witnesses.push_back(number(s));
    return Json{{"violation", violation(c.violation, chain)},
                {"positions", positions},
                {"cost", number(c.cost)},
                {"witness_states", witnesses}};
}

inline Json maturity_variance(const MaturityVariance& mv) {
    Json j{{"label", mv.label}, {"maturity", number(mv.maturity)}};
    if (mv.total_variance.finite()) {
        j["total_variance"] = number(mv.total_variance.value);
    } else {
        j["diverged_reason"] = mv.divergence_reason();
        if (mv.diverged_side) j["diverged_side"] = to_string(*mv.diverged_side);
    }
    j["excluded_strikes"] = strikes(mv.excluded_strikes);
    j["put_case"] = to_string(mv.put.case_taken);
    j["call_case"] = to_string(mv.call.case_taken);
    if (mv.put.f0) j["put_f0"] = line(*mv.put.f0);
    if (mv.call.tail_warning) j["call_tail_warning"] = *mv.call.tail_warning;
    if (mv.filter_error) j["filter_error"] = *mv.filter_error;
    return j;
}

inline Json benchmark(const BenchmarkResult& b) {
    Json j{{"label", b.label}, {"maturity", number(b.maturity)}};
    if (b.failed) {
        j["failed_reason"] = *b.failed;
        j["failed_stage"] = *b.failed_stage;
    } else {
        j["total_variance"] = number(b.total_variance);
    }
    if (b.forward) j["forward"] = number(*b.forward);
    if (!b.failed) {
        j["k_star"] = number(b.eligible.k_star);
        j["eligible_count"] = b.eligible.quotes.size();
    }
    return j;
}

inline Json index(const IndexResult& r) {
    Json j{{"target_days", r.target_days}};
    if (r.failure) {
        j["failed_reason"] = *r.failure;
        return j;
    }
    j["interpolated_variance"] = number(r.interpolated_variance.value);
    if (r.index_level) j["index_level"] = number(*r.index_level);
    if (r.extrapolated) j["extrapolated"] = true;
    return j;
}

/// (proposed - benchmark) / benchmark, or null when either side is missing.
inline Json relative_divergence(std::optional<double> proposed, std::optional<double> bench) {
    if (!proposed || !bench || *bench == 0.0) return Json(nullptr);
    return number((*proposed - *bench) / *bench);
}

}  // namespace mfiv::report
