#include <doctest.h>

#include <cmath>
#include <vector>

#include "idmfit/lifetable.hpp"
#include "support.hpp"

using namespace idmfit;

namespace {

LifeTableColumn column(std::vector<double> values, double width = 5.0, double start = 20.0) {
    std::vector<LifeTableEntry> e;
    for (std::size_t k = 0; k < values.size(); ++k) {
        const double lo = start + width * static_cast<double>(k);
        e.push_back({AgeInterval(lo, lo + width), values[k]});
    }
    return LifeTableColumn(std::move(e));
}

// Spreadsheet-style recomputation: differences of natural logs, not logs of ratios.
std::vector<double> log_difference_rates(const std::vector<double>& v, double width) {
    std::vector<double> r;
    for (std::size_t k = 0; k + 1 < v.size(); ++k) r.push_back((std::log(v[k]) - std::log(v[k + 1])) / width);
    return r;
}

} // namespace

TEST_CASE("life-table CSV holds both published columns") {
    const auto t = test::england_wales();
    REQUIRE(t.general.size() == 9);
    CHECK(t.general.entries()[0].value == 481185);
    CHECK(t.diseased.entries()[0].value == 343937);
    CHECK(t.general.entries()[0].interval == AgeInterval(20, 25));
    CHECK(t.diseased.entries()[8].value == 163241);
}

TEST_CASE("life-table parse errors") {
    try {
        parse_lifetable_csv("age_lo,age_hi,general,diseased\n20,25,0,5\n");
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::negative_value);
        CHECK(std::string(e.what()).find("non-positive life-table value") != std::string::npos);
    }
    CHECK_THROWS_AS(parse_lifetable_csv("age_lo,age_hi,general,diseased\n20,25,x,5\n"), ParseError);
    CHECK_THROWS_AS(parse_lifetable_csv("age_lo,age_hi,general,diseased\n20,25,5\n"), ParseError);
    CHECK_THROWS_AS(parse_lifetable_csv(""), ParseError);
}

TEST_CASE("columns with different grids are a grid mismatch") {
    try {
        LifeTable(column({3, 2, 1}), column({3, 2}));
        FAIL("expected error");
    } catch (const ParseError& e) {
        CHECK(e.kind() == ParseError::Kind::grid_mismatch);
    }
}

TEST_CASE("first general-population rate by direct arithmetic") {
    const auto rate = lifetable_to_rate(column({481185, 478683, 476150}));
    CHECK(rate(20.0) == doctest::Approx(std::log(481185.0 / 478683.0) / 5.0).epsilon(1e-15));
    CHECK(rate(22.0) == doctest::Approx(1.043e-3).epsilon(1e-3));
}

TEST_CASE("constant column has zero rates") {
    Diagnostics diag;
    const auto rate = lifetable_to_rate(column({1000, 1000, 1000}), &diag);
    for (double v : rate.values()) CHECK(v == 0.0);
}

TEST_CASE("full general column matches the log-difference oracle") {
    const auto t = test::england_wales();
    std::vector<double> values;
    for (const auto& e : t.general.entries()) values.push_back(e.value);
    const auto oracle = log_difference_rates(values, 5.0);

    Diagnostics diag;
    const auto rate = lifetable_to_rate(t.general, &diag);
    REQUIRE(rate.values().size() == 9);
    for (std::size_t k = 0; k < oracle.size(); ++k) {
        CHECK(rate.values()[k] == doctest::Approx(oracle[k]).epsilon(1e-12));
        CHECK(rate(20.0 + 5.0 * static_cast<double>(k) + 2.5) == rate.values()[k]);
    }
    const double extrapolated = oracle[7] * oracle[7] / oracle[6];
    CHECK(rate.values()[8] == doctest::Approx(extrapolated).epsilon(1e-12));
    CHECK(rate(63.0) == rate.values()[8]);
    CHECK(rate(80.0) == rate.values()[8]); // carried forward
    CHECK(rate(5.0) == rate.values()[0]);  // carried backward
    CHECK(diag.contains("lifetable.extrapolation"));
}

TEST_CASE("non-monotone column clamps to zero with a warning") {
    Diagnostics diag;
    const auto rate = lifetable_to_rate(column({100, 90, 95, 80}), &diag);
    CHECK(rate.values()[1] == 0.0);
    CHECK(rate.values()[0] > 0.0);
    CHECK(diag.contains("lifetable.clamp"));
}

TEST_CASE("conversion preconditions") {
    CHECK_THROWS_AS(lifetable_to_rate(column({100})), std::invalid_argument);
    std::vector<LifeTableEntry> uneven{{AgeInterval(20, 25), 100}, {AgeInterval(25, 35), 90}};
    CHECK_THROWS_AS(lifetable_to_rate(LifeTableColumn(uneven)), std::invalid_argument);
}

TEST_CASE("property: rates are invariant under rescaling the column") {
    const auto t = test::england_wales();
    const auto base = lifetable_to_rate(t.diseased);
    for (double lambda : {1e-3, 0.37, 2.0, 1e5}) {
        std::vector<double> scaled;
        for (const auto& e : t.diseased.entries()) scaled.push_back(e.value * lambda);
        const auto r = lifetable_to_rate(column(scaled));
        for (std::size_t k = 0; k < scaled.size(); ++k)
            CHECK(r.values()[k] == doctest::Approx(base.values()[k]).epsilon(1e-12));
    }
}

TEST_CASE("property: exponential survivor column recovers its hazard") {
    for (double mu : {1e-4, 0.003, 0.02, 0.15}) {
        for (double w : {1.0, 5.0}) {
            std::vector<double> v;
            for (int k = 0; k < 8; ++k) v.push_back(std::exp(-mu * w * k));
            const auto r = lifetable_to_rate(column(v, w));
            for (std::size_t k = 0; k + 1 < v.size(); ++k)
                CHECK(std::abs(r.values()[k] - mu) < 1e-12);
            for (double x : r.values()) CHECK(x >= 0.0);
        }
    }
}
