#pragma once

// Synthetic quote chains for the property and acceptance tests.

#include "mfiv/mfiv.hpp"

#include <boost/math/distributions/normal.hpp>

#include <cmath>
#include <random>
#include <vector>

namespace mfiv::testing {

using Rng = std::mt19937_64;

inline Rational uniform_rational(Rng& rng, std::int64_t lo, std::int64_t hi) {
    return Rational(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng));
}

/// A discrete terminal distribution: atoms at `support` with `weights`
/// (positive rationals summing to one) and discount factor `discount`.
struct DiscreteMarket {
    Decimal discount;
    std::vector<Rational> support;
    std::vector<Rational> weights;

    Rational put(const Rational& k) const {
        Rational v = 0;
        for (std::size_t m = 0; m < support.size(); ++m)
            if (k > support[m]) v += weights[m] * (k - support[m]);
        return discount.to_rational() * v;
    }
    Rational call(const Rational& k) const {
        Rational v = 0;
        for (std::size_t m = 0; m < support.size(); ++m)
            if (support[m] > k) v += weights[m] * (support[m] - k);
        return discount.to_rational() * v;
    }
};

struct GeneratedChains {
    DiscreteMarket market;
    std::vector<Decimal> strikes;
    QuoteChain puts;
    QuoteChain calls;
};

/// Wraps an exact price in a non-negative random spread, rounded outward to
/// the 8-digit grid so that bid <= price <= ask still holds.
inline Quote wrap(Rng& rng, Decimal strike, const Rational& price, const Rational& max_half_spread) {
    std::uniform_int_distribution<int> coin(0, 3);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Rational down = coin(rng) == 0 ? Rational(0) : Rational(max_half_spread * Rational(static_cast<std::int64_t>(u(rng) * 1e6), 1000000));
    Rational up = coin(rng) == 0 ? Rational(0) : Rational(max_half_spread * Rational(static_cast<std::int64_t>(u(rng) * 1e6), 1000000));
    Rational lo = price - down;
    if (lo < 0) lo = 0;
    return {strike, Decimal::floor_of(lo), Decimal::ceil_of(Rational(price + up))};
}

/// Point masses on a half-strike grid with at least one atom in every gap
/// (0, K_1), (K_n, K_n+1) and (K_N, inf). Prices are exact, so the chains
/// admit a consistent model and are arbitrage-free by construction.
inline GeneratedChains generate_point_mass_chains(Rng& rng, int max_strikes = 50) {
    GeneratedChains g;
    const int n = std::uniform_int_distribution<int>(1, max_strikes)(rng);
    static const int kSteps[] = {1, 2, 5, 10, 25};
    const std::int64_t h = kSteps[std::uniform_int_distribution<int>(0, 4)(rng)];
    const std::int64_t base = h * std::uniform_int_distribution<std::int64_t>(1, 40)(rng);
    for (int i = 0; i < n; ++i) g.strikes.push_back(Decimal::from_int(base + h * i));

    // atoms on multiples of h/2; mandatory ones in every gap, extras anywhere
    const Rational half(h, 2);
    std::vector<Rational> atoms;
    atoms.push_back(Rational(base) / 2);
    for (int i = 0; i + 1 < n; ++i) atoms.push_back(Rational(base + h * i) + half);
    atoms.push_back(Rational(base + h * (n - 1)) + half);
    const int extras = std::uniform_int_distribution<int>(0, 10)(rng);
    const std::int64_t top_slot = 2 * (base + h * n) / h + 8;
    for (int e = 0; e < extras; ++e) atoms.push_back(half * uniform_rational(rng, 0, top_slot));

    Rational total = 0;
    std::vector<Rational> w;
    for (std::size_t m = 0; m < atoms.size(); ++m) {
        w.push_back(uniform_rational(rng, 1, 100));
        total += w.back();
    }
    for (Rational& x : w) x /= total;

    const std::int64_t d_raw = std::uniform_int_distribution<std::int64_t>(90'000'000, 100'000'000)(rng);
    g.market = {Decimal::from_raw(d_raw), atoms, w};

    const Rational max_spread = Rational(h) * uniform_rational(rng, 0, 50) / 100;
    g.puts.side = Side::Put;
    g.calls.side = Side::Call;
    for (Decimal k : g.strikes) {
        g.puts.quotes.push_back(wrap(rng, k, g.market.put(k.to_rational()), max_spread));
        g.calls.quotes.push_back(wrap(rng, k, g.market.call(k.to_rational()), max_spread));
    }
    return g;
}

// Random chain on a coarse grid so that equalities (ties, zero intercepts,
// touching lines) are common. Not arbitrage-free in general.
inline QuoteChain random_rough_chain(Rng& rng, int max_n, Side side = Side::Put) {
    QuoteChain c;
    c.side = side;
    const int n = std::uniform_int_distribution<int>(1, max_n)(rng);
    std::int64_t k = 0;
    std::uniform_int_distribution<int> step(1, 3), price(0, 12);
    for (int i = 0; i < n; ++i) {
        k += 5 * step(rng);
        int b = price(rng), a = price(rng);
        if (b > a) std::swap(b, a);
        if (a == 0) a = 1;
        c.quotes.push_back({Decimal::from_int(k), Decimal::from_raw(b * 25'000'000), Decimal::from_raw(a * 25'000'000)});
    }
    return c;
}

// ---------------------------------------------------------------------------
// Random curves

inline Rational random_rational(Rng& rng, std::int64_t lo, std::int64_t hi, std::int64_t den) {
    return Rational(std::uniform_int_distribution<std::int64_t>(lo, hi)(rng), den);
}

// Non-decreasing convex curve: rising lines with negative intercepts plus 0.
inline PiecewiseLinearCurve random_put_like(Rng& rng) {
    std::vector<Line> lines;
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < m; ++i) lines.push_back(Line{random_rational(rng, 1, 200, 100), random_rational(rng, -5000, -1, 100), {}});
    return upper_envelope(lines, true);
}

// Non-increasing convex curve with a zero tail.
inline PiecewiseLinearCurve random_call_like(Rng& rng) {
    std::vector<Line> lines;
    const int m = std::uniform_int_distribution<int>(1, 8)(rng);
    for (int i = 0; i < m; ++i) lines.push_back(Line{random_rational(rng, -200, -1, 100), random_rational(rng, 1, 5000, 100), {}});
    return upper_envelope(lines, true);
}

// ---------------------------------------------------------------------------
// Lognormal market

inline double black_put(double f, double k, double sd, double d) {
    static const boost::math::normal n01;
    const double d1 = (std::log(f / k) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    return d * (k * boost::math::cdf(n01, -d2) - f * boost::math::cdf(n01, -d1));
}

inline double black_call(double f, double k, double sd, double d) {
    static const boost::math::normal n01;
    const double d1 = (std::log(f / k) + 0.5 * sd * sd) / sd;
    const double d2 = d1 - sd;
    return d * (f * boost::math::cdf(n01, d1) - k * boost::math::cdf(n01, d2));
}

struct LognormalSpec {
    double forward = 100.0;
    double sigma = 0.2;
    double maturity = 30.0 / 365.0;
    double discount = 0.999;
    double width_sd = 8.0;          // strikes span +- this many standard deviations
    double spacing = 0.0025;        // strike step as a fraction of the forward
    double max_rel_spread = 0.0005; // (ask - bid) / price
};

/// Dense chain with tight spreads around Black prices. Strikes are rounded
/// to cents; prices are rounded outward to the 8-digit grid.
inline MarketSnapshot lognormal_snapshot(Rng& rng, const LognormalSpec& spec, const std::string& label) {
    MarketSnapshot s;
    s.label = label;
    s.maturity = Decimal::from_raw(std::llround(spec.maturity * 1e8));
    s.discount = Decimal::from_raw(std::llround(spec.discount * 1e8));
    s.put_chain.side = Side::Put;
    s.call_chain.side = Side::Call;

    const double sd = spec.sigma * std::sqrt(spec.maturity);
    const double lo = spec.forward * std::exp(-spec.width_sd * sd);
    const double hi = spec.forward * std::exp(spec.width_sd * sd);
    const double step = spec.forward * spec.spacing;
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const double d = s.discount.to_double();

    for (double k = std::ceil(lo / step) * step; k <= hi; k += step) {
        const Decimal strike = Decimal::from_raw(std::llround(k * 100) * 1'000'000);
        const double kk = strike.to_double();
        for (Side side : {Side::Put, Side::Call}) {
            const double price = side == Side::Put ? black_put(spec.forward, kk, sd, d) : black_call(spec.forward, kk, sd, d);
            const double half = 0.5 * spec.max_rel_spread * price;
            const double bid = std::max(0.0, price - u(rng) * half);
            const double ask = price + u(rng) * half;
            Quote q{strike, Decimal::from_raw(static_cast<std::int64_t>(std::floor(bid * 1e8))),
                    Decimal::from_raw(static_cast<std::int64_t>(std::ceil(ask * 1e8)))};
            if (q.ask.is_zero()) q.ask = Decimal::from_raw(1);
            s.chain(side).quotes.push_back(q);
        }
    }
    return s;
}

}  // namespace mfiv::testing
