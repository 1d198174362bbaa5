#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "rankarb/market_sim.hpp"
#include "test_util.hpp"

using namespace rankarb;

TEST_CASE("zero drift and zero vol leave caps constant") {
    AtlasConfig c;
    c.n_assets = 4;
    c.n_days = 6;
    c.minutes_per_day = 20;
    c.rank_vols = {0.0};
    const auto m = generate_atlas_market(c);
    for (Index t = 1; t < m.daily.n_dates(); ++t) {
        CHECK(m.daily.caps.col(t) == m.daily.caps.col(0));
        CHECK(m.daily.returns.col(t).isZero(0.0));
    }
}

TEST_CASE("two-asset paths cross in nearly every seed") {
    int crossed = 0;
    for (std::uint64_t seed = 7; seed < 107; ++seed) {
        AtlasConfig c;
        c.n_assets = 2;
        c.n_days = 252;
        c.minutes_per_day = 390;
        c.rank_vols = {0.02};
        c.initial_log_spacing = 1e-4;
        c.seed = seed;
        const auto m = generate_atlas_market(c);
        bool swap = false;
        for (const auto& day : m.intraday) {
            swap = swap || (day.caps.row(1).array() > day.caps.row(0).array()).any();
        }
        crossed += swap;
    }
    CHECK(crossed > 99);
}

TEST_CASE("generation is deterministic per seed") {
    AtlasConfig c;
    c.n_assets = 5;
    c.n_days = 10;
    c.minutes_per_day = 30;
    c.seed = 3;
    const auto a = generate_atlas_market(c);
    const auto b = generate_atlas_market(c);
    CHECK(a.daily.caps == b.daily.caps);
    CHECK(a.intraday.back().caps == b.intraday.back().caps);
    c.seed = 4;
    CHECK(generate_atlas_market(c).daily.caps != a.daily.caps);
}

TEST_CASE("intraday ticks line up with the daily panel") {
    AtlasConfig c;
    c.n_assets = 6;
    c.n_days = 12;
    c.minutes_per_day = 390;
    c.common_loading = 0.4;
    const auto m = generate_atlas_market(c);
    REQUIRE(m.intraday.size() == 11);
    for (Index t = 1; t < m.daily.n_dates(); ++t) {
        const auto& day = m.intraday[static_cast<std::size_t>(t - 1)];
        CHECK(day.day == m.daily.dates[static_cast<std::size_t>(t)]);
        CHECK(day.n_minutes() == 390);
        CHECK(day.caps.col(0) == m.daily.caps.col(t - 1));
        CHECK(day.caps.col(389) == m.daily.caps.col(t));
        const VectorXd ratio = (m.daily.caps.col(t).array() / m.daily.caps.col(t - 1).array() - 1.0).matrix();
        CHECK(max_rel_diff(m.daily.returns.col(t), ratio) <= 1e-12);
    }
    m.daily.validate();
}

TEST_CASE("invalid atlas configs are rejected") {
    AtlasConfig c;
    c.n_assets = 1;
    CHECK_THROWS_AS(generate_atlas_market(c), ConfigError);
    c.n_assets = 3;
    c.rank_vols = {0.1, 0.2};
    CHECK_THROWS_AS(generate_atlas_market(c), ConfigError);
    c.rank_vols = {-0.1};
    CHECK_THROWS_AS(generate_atlas_market(c), ConfigError);
}

TEST_CASE("daily loader reads a well-formed file") {
    TempDir dir;
    const auto path = dir.write("d.csv",
                                "date,asset,cap,return\n"
                                "2020-01-02,A,10,\n2020-01-02,B,5,\n"
                                "2020-01-03,A,11,0.1\n2020-01-03,B,5,0\n"
                                "2020-01-06,A,11,0\n2020-01-06,B,,\n");
    std::vector<LoadWarning> warnings;
    const auto p = load_daily_panel(path, warnings);
    CHECK(p.n_assets() == 2);
    CHECK(p.n_dates() == 3);
    CHECK(warnings.empty());
    CHECK_FALSE(p.has_cap(1, 2));
    CHECK(std::isnan(p.caps(1, 2)));
    CHECK(p.has_return(0, 1));
    CHECK(p.returns(0, 1) == doctest::Approx(0.1));
}

TEST_CASE("daily loader errors name the offending row") {
    TempDir dir;
    auto path = dir.write("d.csv", "date,asset,cap,return\n2020-01-02,A,10,\n2020-01-02,B,0,\n");
    try {
        load_daily_panel(path);
        FAIL("expected a load error");
    } catch (const DataError& e) {
        CHECK(std::string(e.what()).find("row 3") != std::string::npos);
    }
    path = dir.write("e.csv", "date,asset,cap,return\n2020-01-03,A,10,\n2020-01-02,A,10,\n");
    CHECK_THROWS_AS(load_daily_panel(path), DataError);
    path = dir.write("f.csv", "date,name,cap,return\n2020-01-03,A,10,\n");
    CHECK_THROWS_AS(load_daily_panel(path), DataError);
}

TEST_CASE("returns inconsistent with caps produce a warning") {
    TempDir dir;
    const auto path = dir.write("d.csv",
                                "date,asset,cap,return\n"
                                "2020-01-02,A,10,\n2020-01-03,A,12,0.2\n2020-01-06,A,12,0.001\n");
    std::vector<LoadWarning> warnings;
    load_daily_panel(path, warnings);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].row == 4);
}

TEST_CASE("intraday loader checks continuity with the prior close") {
    AtlasConfig c;
    c.n_assets = 3;
    c.n_days = 3;
    c.minutes_per_day = 390;
    const auto m = generate_atlas_market(c);
    TempDir dir;
    write_daily_csv(m.daily, dir.path / "daily.csv");
    write_intraday_csv({m.intraday[0]}, dir.path / "one.csv");
    const auto daily = load_daily_panel(dir.path / "daily.csv");
    const auto day = load_intraday_panel(dir.path / "one.csv", &daily);
    CHECK(day.n_minutes() == 390);
    CHECK(max_rel_diff(day.caps, m.intraday[0].caps) <= 1e-15);

    auto shifted = m.intraday[0];
    shifted.caps(1, 0) *= 1.0 + 2e-6;
    write_intraday_csv({shifted}, dir.path / "bad.csv");
    CHECK_THROWS_AS(load_intraday_panel(dir.path / "bad.csv", &daily), DataError);
}

TEST_CASE("csv round trip preserves generated panels") {
    AtlasConfig c;
    c.n_assets = 4;
    c.n_days = 8;
    c.minutes_per_day = 10;
    auto m = generate_atlas_market(c);
    m.daily.risk_free.setConstant(1e-4);
    TempDir dir;
    write_daily_csv(m.daily, dir.path / "daily.csv", "config_hash=abc");
    write_risk_free_csv(m.daily, dir.path / "rf.csv");
    write_intraday_csv(m.intraday, dir.path / "intraday.csv");
    auto back = load_daily_panel(dir.path / "daily.csv");
    load_risk_free(dir.path / "rf.csv", back);
    CHECK(back.assets == m.daily.assets);
    CHECK(back.dates == m.daily.dates);
    CHECK(back.caps == m.daily.caps);
    CHECK(back.risk_free == m.daily.risk_free);
    const auto days = load_intraday_panels(dir.path / "intraday.csv", &back);
    CHECK(days.size() == m.intraday.size());
    CHECK(days.back().caps == m.intraday.back().caps);
}

TEST_CASE("universe selection sorts by cap and filters next-day returns") {
    MarketPanel p = make_panel({{5, 9, 1}, {5, 9, 1}}, {{NAN, NAN, NAN}, {0.0, 0.0, 0.0}});
    auto sel = select_universe(p, 0, 2);
    REQUIRE(sel.members.size() == 2);
    CHECK(sel.members[0] == 1);
    CHECK(sel.members[1] == 0);

    p.return_valid(1, 1) = false;
    p.returns(1, 1) = NAN;
    sel = select_universe(p, 0, 2);
    REQUIRE(sel.members.size() == 1);
    CHECK(sel.members[0] == 0);

    MarketPanel tie = make_panel({{5, 5, 1}, {5, 5, 1}}, {{NAN, NAN, NAN}, {0.0, 0.0, 0.0}});
    sel = select_universe(tie, 0, 1);
    CHECK(sel.members == std::vector<Index>{0});
    CHECK_THROWS_AS(select_universe(p, 1, 2), DomainError);
}
