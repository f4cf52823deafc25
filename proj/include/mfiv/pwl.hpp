#pragma once

#include "mfiv/decimal.hpp"

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mfiv {

class ContractViolation : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

/// Where a line came from. `i`/`j` are 0-based chain indices when meaningful.
enum class LineKind { Pair, F0, FD, GD, F1, F2, Zero, Other };

struct LineTag {
    LineKind kind = LineKind::Other;
    int i = -1;
    int j = -1;

    std::string to_string() const {
        switch (kind) {
            case LineKind::Pair: return "f(" + std::to_string(i) + "," + std::to_string(j) + ")";
            case LineKind::F0: return "f0";
            case LineKind::FD: return "fD(" + std::to_string(i) + ")";
            case LineKind::GD: return "gD(" + std::to_string(i) + ")";
            case LineKind::F1: return "f1";
            case LineKind::F2: return "f2";
            case LineKind::Zero: return "zero";
            case LineKind::Other: return "line";
        }
        return "line";
    }

    friend bool operator==(const LineTag&, const LineTag&) = default;
};

struct Line {
    Rational slope;
    Rational intercept;  // value at K = 0
    LineTag tag;

    Rational at(const Rational& k) const { return slope * k + intercept; }

    bool same_function(const Line& o) const { return slope == o.slope && intercept == o.intercept; }

    static Line zero() { return {Rational(0), Rational(0), {LineKind::Zero}}; }
};

struct Point {
    Rational strike;
    Rational value;
};

/// Line through two points with distinct strikes.
inline Line line_through(const Point& p1, const Point& p2, LineTag tag = {}) {
    if (p1.strike == p2.strike) throw ContractViolation("line_through: degenerate line (equal strikes)");
    Rational slope = (p2.value - p1.value) / (p2.strike - p1.strike);
    Rational intercept = p1.value - slope * p1.strike;
    return {std::move(slope), std::move(intercept), tag};
}

/// Line with the given slope through one point.
inline Line line_with_slope(const Rational& slope, const Point& p, LineTag tag = {}) {
    Rational intercept = p.value - slope * p.strike;
    return {slope, std::move(intercept), tag};
}

/// A piece of a piecewise-linear function on [lo, hi); `hi` empty means +inf.
struct Piece {
    Rational lo;
    std::optional<Rational> hi;
    Line line;
};

/// Continuous piecewise-linear function on [0, inf) given by segments; each
/// segment runs from its start to the next segment's start, the last to +inf.
/// Built by `upper_envelope`, which guarantees convexity.
class PiecewiseLinearCurve {
public:
    struct Segment {
        Rational start;
        Line line;
    };

    PiecewiseLinearCurve() = default;
    explicit PiecewiseLinearCurve(std::vector<Segment> segments) : segments_(std::move(segments)) {
        if (segments_.empty() || segments_.front().start != 0)
            throw std::invalid_argument("curve must start at K = 0");
    }

    const std::vector<Segment>& segments() const { return segments_; }
    bool empty() const { return segments_.empty(); }

    std::size_t segment_index(const Rational& k) const {
        auto it = std::upper_bound(segments_.begin(), segments_.end(), k,
                                   [](const Rational& x, const Segment& s) { return x < s.start; });
        return it == segments_.begin() ? 0 : static_cast<std::size_t>(it - segments_.begin()) - 1;
    }

    const Line& line_at(const Rational& k) const { return segments_[segment_index(k)].line; }
    Rational value_at(const Rational& k) const { return line_at(k).at(k); }
    Rational value_at(Decimal k) const { return value_at(k.to_rational()); }

    /// Strikes where the active line changes (the origin is not included).
    std::vector<Rational> breakpoints() const {
        std::vector<Rational> out;
        for (std::size_t n = 1; n < segments_.size(); ++n) out.push_back(segments_[n].start);
        return out;
    }

    const Line& first_line() const { return segments_.front().line; }
    const Line& terminal_line() const { return segments_.back().line; }

    bool is_convex() const {
        for (std::size_t n = 1; n < segments_.size(); ++n)
            if (segments_[n].line.slope < segments_[n - 1].line.slope) return false;
        return true;
    }
    bool is_non_decreasing() const {
        return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.line.slope >= 0; });
    }
    bool is_non_increasing() const {
        return std::all_of(segments_.begin(), segments_.end(), [](const Segment& s) { return s.line.slope <= 0; });
    }

    std::vector<Piece> pieces() const {
        std::vector<Piece> out;
        out.reserve(segments_.size());
        for (std::size_t n = 0; n < segments_.size(); ++n) {
            std::optional<Rational> hi;
            if (n + 1 < segments_.size()) hi = segments_[n + 1].start;
            out.push_back({segments_[n].start, std::move(hi), segments_[n].line});
        }
        return out;
    }

private:
    std::vector<Segment> segments_;
};

/// Pointwise maximum of `lines` (and of the zero function when
/// `include_zero`), restricted to [0, inf).
///
/// Lines are sorted by slope; among equal slopes the higher intercept wins and
/// exact duplicates keep their first occurrence. A single upper-hull sweep
/// then discards lines that are never strictly on top.
inline PiecewiseLinearCurve upper_envelope(std::span<const Line> lines, bool include_zero) {
    std::vector<const Line*> sorted;
    sorted.reserve(lines.size() + 1);
    for (const Line& l : lines) sorted.push_back(&l);
    const Line zero = Line::zero();
    if (include_zero) sorted.push_back(&zero);
    if (sorted.empty()) throw std::invalid_argument("upper_envelope: no lines");

    std::stable_sort(sorted.begin(), sorted.end(), [](const Line* a, const Line* b) {
        if (a->slope != b->slope) return a->slope < b->slope;
        return a->intercept > b->intercept;
    });

    // Upper hull over the real line, slopes strictly increasing.
    std::vector<const Line*> hull;
    auto crossing = [](const Line& a, const Line& b) -> Rational {
        return (b.intercept - a.intercept) / (a.slope - b.slope);
    };
    for (const Line* l : sorted) {
        if (!hull.empty() && hull.back()->slope == l->slope) continue;
        while (hull.size() >= 2) {
            const Line& a = *hull[hull.size() - 2];
            const Line& b = *hull.back();
            if (crossing(a, *l) <= crossing(a, b))
                hull.pop_back();
            else
                break;
        }
        hull.push_back(l);
    }

    // Clip to [0, inf): drop leading lines whose range ends at or before 0.
    std::size_t first = 0;
    while (first + 1 < hull.size() && crossing(*hull[first], *hull[first + 1]) <= 0) ++first;

    std::vector<PiecewiseLinearCurve::Segment> segments;
    segments.push_back({Rational(0), *hull[first]});
    for (std::size_t n = first + 1; n < hull.size(); ++n)
        segments.push_back({crossing(*hull[n - 1], *hull[n]), *hull[n]});
    return PiecewiseLinearCurve(std::move(segments));
}

/// Exact piecewise representation of min{p, c} on [0, inf). Inside every
/// interval of the merged breakpoints both inputs are linear, so at most one
/// crossing is inserted per interval. Adjacent pieces on the same line are
/// merged.
inline std::vector<Piece> min_of_curves(const PiecewiseLinearCurve& p, const PiecewiseLinearCurve& c) {
    std::vector<Rational> cuts = p.breakpoints();
    for (const auto& b : c.breakpoints()) cuts.push_back(b);
    cuts.push_back(Rational(0));
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    std::vector<Piece> out;
    auto emit = [&](const Rational& lo, const std::optional<Rational>& hi, const Line& line) {
        if (!out.empty() && out.back().line.same_function(line)) {
            out.back().hi = hi;
            return;
        }
        out.push_back({lo, hi, line});
    };
    auto pick = [&](const Rational& lo, const std::optional<Rational>& hi) -> const Line& {
        const Rational probe = hi ? Rational((lo + *hi) / 2) : Rational(lo + 1);
        const Line& lp = p.line_at(probe);
        const Line& lc = c.line_at(probe);
        return lc.at(probe) < lp.at(probe) ? lc : lp;
    };

    for (std::size_t n = 0; n < cuts.size(); ++n) {
        const Rational& lo = cuts[n];
        std::optional<Rational> hi;
        if (n + 1 < cuts.size()) hi = cuts[n + 1];

        const Line& lp = p.line_at(lo);
        const Line& lc = c.line_at(lo);
        const Rational ds = lp.slope - lc.slope;
        std::optional<Rational> cross;
        if (ds != 0) {
            Rational x = (lc.intercept - lp.intercept) / ds;
            if (x > lo && (!hi || x < *hi)) cross = std::move(x);
        }
        if (cross) {
            emit(lo, cross, pick(lo, cross));
            emit(*cross, hi, pick(*cross, hi));
        } else {
            emit(lo, hi, pick(lo, hi));
        }
    }
    return out;
}

enum class DivergenceKind { PositiveAtOrigin, LinearAtOrigin, LinearGrowthAtInfinity };

inline const char* to_string(DivergenceKind k) {
    switch (k) {
        case DivergenceKind::PositiveAtOrigin: return "positive value at origin";
        case DivergenceKind::LinearAtOrigin: return "O(1/K) at origin";
        case DivergenceKind::LinearGrowthAtInfinity: return "linear growth at infinity";
    }
    return "divergent";
}

struct Divergence {
    DivergenceKind kind;
    std::string detail;  // offending line or side

    std::string reason() const { return detail.empty() ? to_string(kind) : detail + ": " + to_string(kind); }
};

/// A non-negative real or +inf with the structural reason it is infinite.
struct ExtendedReal {
    double value = 0.0;
    std::optional<Divergence> divergence;

    bool finite() const { return !divergence.has_value(); }
    static ExtendedReal infinite(Divergence d) { return {0.0, std::move(d)}; }
};

/// Closed-form integral of sum over pieces of (aK + b)/K^2 dK, i.e.
/// a ln(x2/x1) + b (1/x1 - 1/x2) per piece. Divergence is decided from the
/// signs of the first and last pieces, never from numeric blow-up.
inline ExtendedReal integrate_over_k_squared(std::span<const Piece> pieces) {
    long double sum = 0.0L;
    for (std::size_t n = 0; n < pieces.size(); ++n) {
        const Piece& pc = pieces[n];
        const Rational& a = pc.line.slope;
        const Rational& b = pc.line.intercept;
        const std::string tag = pc.line.tag.to_string();

        if (pc.line.at(pc.lo) < 0) throw ContractViolation("integrand negative on piece " + tag);
        if (pc.hi && pc.line.at(*pc.hi) < 0) throw ContractViolation("integrand negative on piece " + tag);
        if (!pc.hi && a < 0) throw ContractViolation("integrand negative at infinity on piece " + tag);

        if (pc.lo == 0) {
            if (b > 0) return ExtendedReal::infinite({DivergenceKind::PositiveAtOrigin, tag});
            if (a > 0) return ExtendedReal::infinite({DivergenceKind::LinearAtOrigin, tag});
            continue;  // identically zero next to the origin
        }
        if (!pc.hi) {
            if (a > 0) return ExtendedReal::infinite({DivergenceKind::LinearGrowthAtInfinity, tag});
            sum += static_cast<long double>(to_double(Rational(b / pc.lo)));
            continue;
        }
        const Rational& lo = pc.lo;
        const Rational& hi = *pc.hi;
        const double log_ratio = std::log1p(to_double(Rational((hi - lo) / lo)));
        const double log_term = a == 0 ? 0.0 : to_double(a) * log_ratio;
        const double inv_term = b == 0 ? 0.0 : to_double(Rational(b * (hi - lo) / (lo * hi)));
        sum += static_cast<long double>(log_term) + static_cast<long double>(inv_term);
    }
    return {static_cast<double>(sum), std::nullopt};
}

}  // namespace mfiv
