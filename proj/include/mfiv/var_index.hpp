#pragma once

#include "mfiv/call_curve.hpp"
#include "mfiv/put_curve.hpp"
#include "mfiv/pwl.hpp"
#include "mfiv/quotes.hpp"

#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace mfiv {

struct VarianceOptions {
    bool apply_filter = true;
    int max_filter_passes = 10;
};

/// Model-free expected quadratic variation V(T) over [0, T] for one expiry.
struct MaturityVariance {
    std::string label;
    Decimal maturity;
    ExtendedReal total_variance;
    std::optional<Side> diverged_side;
    PutCurveResult put;
    CallCurveResult call;
    std::vector<Decimal> excluded_strikes;
    std::optional<std::string> filter_error;

    bool diverged() const { return !total_variance.finite(); }
    std::string divergence_reason() const {
        if (!total_variance.divergence) return {};
        if (diverged_side == Side::Put && put.divergence) return "put curve " + put.divergence->reason();
        if (diverged_side == Side::Call && call.divergence) return "call curve " + call.divergence->reason();
        return total_variance.divergence->reason();
    }
};

/// (2/D) * integral over [0, inf) of min{p(K), c(K)} / K^2, exactly up to the
/// logarithms. When filtering is enabled and the put curve diverges, the
/// anomaly filter runs first.
inline MaturityVariance expected_qv(const MarketSnapshot& snapshot, const VarianceOptions& options = {}) {
    if (snapshot.put_chain.empty() || snapshot.call_chain.empty())
        throw std::invalid_argument("expected_qv: snapshot '" + snapshot.label + "' needs both put and call quotes");

    MaturityVariance out;
    out.label = snapshot.label;
    out.maturity = snapshot.maturity;
    out.put = construct_put_curve(snapshot.put_chain, snapshot.discount);
    if (options.apply_filter && out.put.diverges() && !out.put.classification.M_members.empty()) {
        try {
            FilterResult filtered = filter_anomalies(snapshot.put_chain, snapshot.discount, options.max_filter_passes);
            out.put = std::move(filtered.result);
        } catch (const FilterError& e) {
            out.filter_error = e.what();
            out.put = e.partial().result;
        }
        out.excluded_strikes = out.put.excluded_strikes;
    }
    out.call = construct_call_curve(snapshot.call_chain, snapshot.discount);

    const std::vector<Piece> pieces = min_of_curves(out.put.curve, out.call.curve);
    out.total_variance = integrate_over_k_squared(pieces);
    if (out.total_variance.finite()) {
        out.total_variance.value *= 2.0 / snapshot.discount.to_double();
    } else if (out.total_variance.divergence->kind == DivergenceKind::LinearGrowthAtInfinity) {
        out.diverged_side = Side::Call;
    } else {
        out.diverged_side = Side::Put;
    }
    return out;
}

struct IndexConventions {
    double days_per_year = 365.0;
};

/// Two-maturity interpolation of total variance to a target horizon.
struct IndexResult {
    int target_days = 30;
    ExtendedReal interpolated_variance;
    std::optional<double> index_level;  // 100 * sqrt(annualized variance)
    bool extrapolated = false;
    std::optional<std::string> failure;
};

/// Linear interpolation in total variance, then annualization.
/// Requires t1 < t2; a target outside [t1, t2] is extrapolated and flagged.
inline IndexResult interpolate_total_variance(double t1, double v1, double t2, double v2, int target_days,
                                              const IndexConventions& conv = {}) {
    if (!(t1 < t2)) throw std::invalid_argument("interpolate_index: maturities must be strictly increasing");
    if (target_days < 1) throw std::invalid_argument("interpolate_index: target_days must be >= 1");
    const double target = target_days / conv.days_per_year;
    IndexResult out;
    out.target_days = target_days;
    out.extrapolated = target < t1 || target > t2;
    const double v = v1 + (v2 - v1) * (target - t1) / (t2 - t1);
    out.interpolated_variance.value = v;
    if (v < 0) {
        out.failure = "negative interpolated variance";
        return out;
    }
    out.index_level = 100.0 * std::sqrt(v / target);
    return out;
}

inline IndexResult interpolate_index(const MaturityVariance& v1, const MaturityVariance& v2, int target_days,
                                     const IndexConventions& conv = {}) {
    for (const MaturityVariance* v : {&v1, &v2}) {
        if (v->diverged()) {
            IndexResult out;
            out.target_days = target_days;
            out.interpolated_variance = ExtendedReal::infinite(*v->total_variance.divergence);
            out.failure = "maturity '" + v->label + "' diverged: " + v->divergence_reason();
            return out;
        }
    }
    return interpolate_total_variance(v1.maturity.to_double(), v1.total_variance.value, v2.maturity.to_double(),
                                      v2.total_variance.value, target_days, conv);
}

}  // namespace mfiv
