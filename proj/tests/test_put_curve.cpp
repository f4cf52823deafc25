#include "mfiv/mfiv.hpp"
#include "generators.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace mfiv;
using namespace mfiv::testing;

namespace {

Decimal dec(const char* s) { return Decimal::parse(s); }
Rational r(std::int64_t n, std::int64_t d = 1) { return Rational(n, d); }

QuoteChain puts(std::initializer_list<std::array<const char*, 3>> rows) {
    QuoteChain c;
    c.side = Side::Put;
    for (const auto& row : rows) c.quotes.push_back({dec(row[0]), dec(row[1]), dec(row[2])});
    return c;
}

QuoteChain stale_bid_chain() {
    return puts({{"1400", "0", "0.1"},
                 {"1450", "0", "0.1"},
                 {"1475", "0.05", "0.1"},
                 {"1500", "0.05", "0.05"},
                 {"1525", "0.08", "0.12"},
                 {"1550", "0.15", "0.22"},
                 {"1575", "0.3", "0.38"},
                 {"1600", "0.5", "0.6"}});
}

QuoteChain small_example() { return puts({{"10", "0.5", "1"}, {"20", "2.5", "3"}, {"30", "5.5", "6"}}); }

std::vector<std::pair<int, int>> pairs(const std::vector<IndexPair>& v) {
    std::vector<std::pair<int, int>> out;
    for (const auto& p : v) out.emplace_back(p.i, p.j);
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// classification

TEST(ClassifyPut, SmallExample) {
    const auto cls = classify_put(small_example(), dec("1"));
    EXPECT_EQ(pairs(cls.L_members), (std::vector<std::pair<int, int>>{{0, 1}, {1, 2}}));
    EXPECT_EQ(pairs(cls.M_members), (std::vector<std::pair<int, int>>{{1, 2}}));
    EXPECT_EQ(cls.I_L, 0);
    EXPECT_EQ(cls.J_L, 2);
    EXPECT_EQ(cls.I_M, 1);
    EXPECT_EQ(cls.J_M, 2);
    EXPECT_EQ(cls.fD.slope, r(1));
    EXPECT_EQ(cls.fD.intercept, r(-24));
}

TEST(ClassifyPut, SingleQuoteHasEmptyFamilies) {
    const auto cls = classify_put(puts({{"100", "5", "5"}}), dec("1"));
    EXPECT_TRUE(cls.L_members.empty());
    EXPECT_TRUE(cls.M_members.empty());
    EXPECT_FALSE(cls.I_L.has_value());
    EXPECT_FALSE(cls.I_M.has_value());
}

TEST(ClassifyPut, StaleBidChainLocatesIM) {
    const auto chain = stale_bid_chain();
    const auto cls = classify_put(chain, dec("1"));
    ASSERT_TRUE(cls.I_M.has_value());
    EXPECT_EQ(chain[*cls.I_M].strike, dec("1500"));
}

TEST(ClassifyPut, AgreesWithBruteForceOnRoughChains) {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 2000; ++trial) {
        const QuoteChain chain = random_rough_chain(rng, 9);
        const Decimal D = trial % 3 == 0 ? dec("1") : Decimal::from_raw(std::uniform_int_distribution<std::int64_t>(1, 100'000'000)(rng));
        const auto got = classify_put(chain, D);
        const auto want = brute_classify(chain, D);
        ASSERT_EQ(pairs(got.L_members), pairs(want.L)) << "trial " << trial;
        ASSERT_EQ(pairs(got.M_members), pairs(want.M)) << "trial " << trial;
        EXPECT_EQ(got.I_L, want.I_L);
        EXPECT_EQ(got.J_L, want.J_L);
        EXPECT_EQ(got.I_M, want.I_M);
        EXPECT_EQ(got.J_M, want.J_M);
        EXPECT_EQ(got.fD_index, want.fD_index);
        EXPECT_EQ(got.gD_index, want.gD_index);
    }
}

TEST(ClassifyPut, StructuralPropertiesOnArbitrageFreeChains) {
    Rng rng(202);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = generate_point_mass_chains(rng, 30);
        const auto cls = classify_put(g.puts, g.market.discount);
        // M is contained in L
        for (const auto& m : cls.M_members) {
            const bool found = std::any_of(cls.L_members.begin(), cls.L_members.end(),
                                           [&](const IndexPair& l) { return l.i == m.i && l.j == m.j; });
            ASSERT_TRUE(found) << "trial " << trial;
        }
        if (cls.I_M) EXPECT_GE(*cls.I_M, 1);
        // slopes ordered by left index
        for (const auto& a : cls.L_members)
            for (const auto& b : cls.L_members)
                if (a.i < b.i) ASSERT_LE(detail::pair_line(g.puts, a).slope, detail::pair_line(g.puts, b).slope);
        // fD is the slope-D line through the ask at J_L
        if (cls.J_L) {
            const Line through_J = line_with_slope(g.market.discount.to_rational(), detail::ask_point(g.puts, *cls.J_L));
            EXPECT_TRUE(cls.fD.same_function(through_J)) << "trial " << trial;
        }
    }
}

// ---------------------------------------------------------------------------
// f0

TEST(BuildF0, SmallExample) {
    const auto chain = small_example();
    const Line f0 = build_f0_for_M(chain, classify_put(chain, dec("1")));
    EXPECT_EQ(f0.slope, r(1, 4));
    EXPECT_EQ(f0.intercept, r(-2));
}

TEST(BuildF0, StaleBidChainIsConstant) {
    const auto chain = stale_bid_chain();
    const Line f0 = build_f0_for_M(chain, classify_put(chain, dec("1")));
    EXPECT_EQ(f0.slope, r(0));
    EXPECT_EQ(f0.intercept, r(1, 20));
}

TEST(BuildF0, EmptyMIsRejected) {
    const auto chain = puts({{"100", "5", "5"}});
    EXPECT_THROW(build_f0_for_M(chain, classify_put(chain, dec("1"))), std::invalid_argument);
}

// ---------------------------------------------------------------------------
// construction cases

TEST(ConstructPut, MClassSmallExample) {
    const auto chain = small_example();
    const auto res = construct_put_curve(chain, dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::MClass);
    EXPECT_EQ(res.curve.value_at(r(10)), r(1, 2));
    EXPECT_EQ(res.curve.value_at(r(20)), r(3));
    EXPECT_EQ(res.curve.value_at(r(30)), r(6));
    EXPECT_EQ(res.curve.value_at(r(8)), r(0));
    EXPECT_EQ(res.curve.breakpoints().front(), r(8));
    // max(0, 0.25K - 2, 0.3K - 3, K - 24) on a grid
    const std::vector<Line> oracle{{r(1, 4), r(-2), {}}, {r(3, 10), r(-3), {}}, {r(1), r(-24), {}}};
    for (int k = 0; k <= 200; ++k) EXPECT_EQ(res.curve.value_at(r(k, 4)), brute_max(oracle, true, r(k, 4)));
    EXPECT_FALSE(res.diverges());
    EXPECT_EQ(check_put_postconditions(res.curve, chain, dec("1")), "");
}

TEST(ConstructPut, LClassWithZeroBids) {
    const auto chain = puts({{"10", "0", "1"}, {"20", "0", "3"}, {"30", "0", "6"}});
    const auto res = construct_put_curve(chain, dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::LClass);
    EXPECT_FALSE(res.f0.has_value());  // I_L is the first strike
    const std::vector<Line> oracle{{r(1, 5), r(-1), {}}, {r(3, 10), r(-3), {}}, {r(1), r(-24), {}}};
    for (int k = 0; k <= 200; ++k) EXPECT_EQ(res.curve.value_at(r(k, 4)), brute_max(oracle, true, r(k, 4)));
    EXPECT_EQ(check_put_postconditions(res.curve, chain, dec("1")), "");
}

TEST(ConstructPut, LClassBuildsF0WhenILIsInterior) {
    const auto chain = puts({{"10", "0", "2"}, {"20", "0", "3"}, {"30", "0", "5"}});
    const auto res = construct_put_curve(chain, dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::LClass);
    ASSERT_TRUE(res.f0.has_value());
    // slope (3 - 0) / 10 exceeds the only L slope 0.2, so f0 stays out
    EXPECT_EQ(res.f0->slope, r(3, 10));
    EXPECT_EQ(res.curve.value_at(r(20)), r(3));
    EXPECT_EQ(res.curve.value_at(r(10)), r(1));
    EXPECT_EQ(check_put_postconditions(res.curve, chain, dec("1")), "");
}

TEST(ConstructPut, FallbackGDSingleQuote) {
    const auto res = construct_put_curve(puts({{"100", "5", "5"}}), dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::FallbackGD);
    EXPECT_EQ(res.curve.value_at(r(95)), r(0));
    EXPECT_EQ(res.curve.value_at(r(100)), r(5));
    EXPECT_EQ(res.curve.value_at(r(120)), r(25));
    EXPECT_EQ(res.curve.breakpoints(), std::vector<Rational>{r(95)});
}

TEST(ConstructPut, FallbackF1WhenJIsLast) {
    const auto chain = puts({{"10", "0", "3"}, {"20", "2", "4"}});
    const auto res = construct_put_curve(chain, dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::FallbackF1);
    // f1 = 0.4 K - 4 through the ask at 20
    EXPECT_EQ(res.curve.value_at(r(10)), r(0));
    EXPECT_EQ(res.curve.value_at(r(20)), r(4));
    EXPECT_EQ(res.curve.value_at(r(30)), r(8));
    EXPECT_EQ(check_put_postconditions(res.curve, chain, dec("1")), "");
}

TEST(ConstructPut, FallbackF1F2) {
    const auto chain = puts({{"10", "0", "3"}, {"20", "2", "4"}, {"30", "12", "15"}});
    const auto res = construct_put_curve(chain, dec("1"));
    EXPECT_EQ(res.case_taken, CurveCase::FallbackF1F2);
    // max(0, 0.4K - 4, 0.8K - 12)
    const std::vector<Line> oracle{{r(2, 5), r(-4), {}}, {r(4, 5), r(-12), {}}};
    for (int k = 0; k <= 200; ++k) EXPECT_EQ(res.curve.value_at(r(k, 4)), brute_max(oracle, true, r(k, 4)));
    EXPECT_EQ(check_put_postconditions(res.curve, chain, dec("1")), "");
}

// ---------------------------------------------------------------------------
// divergence

TEST(PutDivergence, StaleBidChainDiverges) {
    const auto res = construct_put_curve(stale_bid_chain(), dec("1"));
    ASSERT_TRUE(res.diverges());
    EXPECT_EQ(res.divergence->kind, DivergenceKind::PositiveAtOrigin);
    EXPECT_EQ(res.divergence->detail, "f0 intercept >= 0");
}

TEST(PutDivergence, InterceptSigns) {
    const auto negative = upper_envelope(std::vector<Line>{{r(1, 4), r(-2), {}}}, true);
    EXPECT_FALSE(detect_put_divergence(negative).has_value());

    const auto through_origin = upper_envelope(std::vector<Line>{{r(1, 100), r(0), {LineKind::Other}}}, true);
    const auto d = detect_put_divergence(through_origin);
    ASSERT_TRUE(d.has_value());
    EXPECT_EQ(d->kind, DivergenceKind::LinearAtOrigin);
    EXPECT_NE(d->reason().find("O(1/K) at origin"), std::string::npos);

    const auto constant = upper_envelope(std::vector<Line>{{r(0), r(5, 100), {LineKind::F0}}}, true);
    ASSERT_TRUE(detect_put_divergence(constant).has_value());
    EXPECT_EQ(detect_put_divergence(constant)->kind, DivergenceKind::PositiveAtOrigin);
}

// ---------------------------------------------------------------------------
// anomaly filter

TEST(FilterAnomalies, StaleBidChainExcludes1475) {
    const auto fr = filter_anomalies(stale_bid_chain(), dec("1"));
    EXPECT_EQ(fr.excluded_strikes, std::vector<Decimal>{dec("1475")});
    ASSERT_TRUE(fr.result.f0.has_value());
    EXPECT_EQ(fr.result.f0->slope, r(5, 10000));
    EXPECT_EQ(fr.result.f0->intercept, r(-7, 10));
    EXPECT_FALSE(fr.result.diverges());
    EXPECT_EQ(fr.result.curve.first_line().intercept, r(0));
    EXPECT_GT(fr.result.curve.breakpoints().front(), r(0));
}

TEST(FilterAnomalies, CleanChainIsUntouched) {
    const auto chain = small_example();
    const auto fr = filter_anomalies(chain, dec("1"));
    EXPECT_TRUE(fr.excluded_strikes.empty());
    EXPECT_EQ(fr.passes, 0);
    EXPECT_EQ(fr.filtered, chain);
}

TEST(FilterAnomalies, SeveralBadBidsGoInOnePass) {
    auto chain = stale_bid_chain();
    chain.quotes[0].bid = dec("0.05");
    chain.quotes[1].bid = dec("0.05");
    const auto cls = classify_put(chain, dec("1"));
    EXPECT_EQ(anomalous_indices(chain, cls), (std::vector<int>{0, 1, 2}));
    const auto fr = filter_anomalies(chain, dec("1"));
    EXPECT_EQ(fr.excluded_strikes, (std::vector<Decimal>{dec("1400"), dec("1450"), dec("1475")}));
    EXPECT_EQ(fr.passes, 1);
    EXPECT_FALSE(fr.result.diverges());
}

TEST(FilterAnomalies, RequiresNonEmptyM) {
    EXPECT_THROW(filter_anomalies(puts({{"100", "5", "5"}}), dec("1")), std::invalid_argument);
}

TEST(FilterAnomalies, CapReachedCarriesPartialState) {
    EXPECT_THROW(
        {
            try {
                filter_anomalies(stale_bid_chain(), dec("1"), 0);
            } catch (const FilterError& e) {
                EXPECT_EQ(e.partial().passes, 0);
                EXPECT_TRUE(e.partial().result.diverges());
                throw;
            }
        },
        FilterError);
}

// ---------------------------------------------------------------------------
// properties

TEST(ConstructPut, PostconditionsOnGeneratedChains) {
    Rng rng(303);
    for (int trial = 0; trial < 300; ++trial) {
        const auto g = generate_point_mass_chains(rng, 30);
        const auto res = construct_put_curve(g.puts, g.market.discount);
        ASSERT_EQ(check_put_postconditions(res.curve, g.puts, g.market.discount), "")
            << "trial " << trial << " case " << to_string(res.case_taken);
        EXPECT_TRUE(res.curve.is_convex());
        EXPECT_TRUE(res.curve.is_non_decreasing());
        EXPECT_FALSE(res.diverges());
    }
}

TEST(ConstructPut, ConvexAndTotalOnArbitraryChains) {
    std::mt19937_64 rng(404);
    for (int trial = 0; trial < 2000; ++trial) {
        const QuoteChain chain = random_rough_chain(rng, 10);
        PutCurveResult res;
        ASSERT_NO_THROW(res = construct_put_curve(chain, dec("1"))) << "trial " << trial;
        EXPECT_TRUE(res.curve.is_convex());
    }
}
