// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "garchrnn/data.hpp"
#include "garchrnn/error.hpp"
#include "support.hpp"

using namespace garchrnn;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "garchrnn_test_data";
  fs::create_directories(dir);
  return dir / name;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const auto p = scratch(name);
  std::ofstream(p) << text;
  return p;
}

std::string error_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    return e.what();
  }
  return {};
}

// Frame with L steps whose only feature is the step index.
std::pair<FeatureFrame, VolSeries> index_frame(std::size_t L) {
  FeatureFrame f;
  VolSeries v;
  f.names = {"idx"};
  f.values.resize(static_cast<Eigen::Index>(L), 1);
  f.dates = testing::weekday_dates({2015, 1, 1}, L);
  for (std::size_t i = 0; i < L; ++i) {
    f.values(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i);
    f.raw_returns.push_back(static_cast<double>(i) * 0.1);
    v.values.push_back(100.0 + static_cast<double>(i));
  }
  v.dates = f.dates;
  v.k = 2;
  return {f, v};
}

ReturnSeries series(std::vector<double> v) { return testing::make_returns(v); }

}  // namespace

TEST_SUITE("data") {
  TEST_CASE("three-row price file loads in date order") {
    const auto p = write_file("three.csv", "date,close\n2020-01-03,121\n2020-01-01,100\n2020-01-02,110\n");
    const auto s = load_price_csv(p, "date", "close");
    REQUIRE(s.closes.size() == 3);
    CHECK(s.closes == std::vector<double>{100, 110, 121});
    CHECK(s.dates.front() == Date(2020, 1, 1));
  }

  TEST_CASE("column names are configurable and extra columns ignored") {
    const auto p = write_file("cols.csv", "Open,Date,Adj Close\r\n1,2020-01-01,5\r\n1,2020-01-02,6\r\n");
    const auto s = load_price_csv(p, "Date", "Adj Close");
    CHECK(s.closes == std::vector<double>{5, 6});
  }

  TEST_CASE("duplicate dates are rejected by name") {
    const auto p = write_file("dup.csv", "date,close\n2020-01-01,1\n2020-01-02,2\n2020-01-02,3\n");
    const auto msg = error_of([&] { load_price_csv(p, "date", "close"); });
    CHECK(msg.find("2020-01-02") != std::string::npos);
    CHECK_THROWS_AS(load_price_csv(p, "date", "close"), DataError);
  }

  TEST_CASE("non-positive prices are rejected") {
    const auto p = write_file("neg.csv", "date,close\n2020-01-01,1\n2020-01-02,-5\n");
    CHECK(error_of([&] { load_price_csv(p, "date", "close"); }).find("non-positive price") !=
          std::string::npos);
  }

  TEST_CASE("missing column, empty file and bad rows") {
    const auto p = write_file("ok.csv", "date,close\n2020-01-01,1\n2020-01-02,2\n");
    CHECK(error_of([&] { load_price_csv(p, "date", "price"); }).find("price") != std::string::npos);
    const auto e = write_file("empty.csv", "");
    CHECK(error_of([&] { load_price_csv(e, "date", "close"); }).find("length >= 2") !=
          std::string::npos);
    const auto bad = write_file("bad.csv", "date,close\n2020-01-01,1\n2020-13-02,2\n");
    CHECK(error_of([&] { load_price_csv(bad, "date", "close"); }).find(":3") != std::string::npos);
    CHECK_THROWS_AS(load_price_csv(scratch("nope.csv"), "date", "close"), DataError);
  }

  TEST_CASE("log returns") {
    PriceSeries p{testing::weekday_dates({2020, 1, 1}, 2), {1.0, std::exp(1.0)}};
    CHECK(log_returns(p, false).values[0] == doctest::Approx(1.0).epsilon(1e-15));
    p.closes = {100, 110};
    CHECK(log_returns(p, false).values[0] == doctest::Approx(0.0953102).epsilon(1e-6));
    CHECK(log_returns(p, true).values[0] == doctest::Approx(9.53102).epsilon(1e-6));
    PriceSeries flat{testing::weekday_dates({2020, 1, 1}, 3), {100, 100, 100}};
    const auto r = log_returns(flat, true);
    CHECK(r.values == std::vector<double>{0, 0});
    CHECK(r.dates.front() == flat.dates[1]);
  }

  TEST_CASE("cumulative log returns reconstruct the price ratio") {
    std::mt19937_64 rng(3);
    std::lognormal_distribution<double> ln(0.0, 0.02);
    PriceSeries p;
    p.dates = testing::weekday_dates({2012, 1, 2}, 500);
    double price = 50;
    for (std::size_t i = 0; i < 500; ++i) p.closes.push_back(price *= ln(rng));
    const auto r = log_returns(p, false);
    double s = 0;
    for (double v : r.values) s += v;
    const double ratio = p.closes.back() / p.closes.front();
    CHECK(std::abs(std::exp(s) - ratio) / ratio < 1e-12);
  }

  TEST_CASE("realized volatility") {
    auto r = series({0, 2});
    const auto v = realized_volatility(r, 2);
    REQUIRE(v.values.size() == 1);
    CHECK(v.values[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(v.dates[0] == r.dates[1]);
    CHECK(realized_volatility(series({3, 3, 3, 3, 3, 3}), 5).values ==
          std::vector<double>{0, 0});
    CHECK_THROWS_AS(realized_volatility(series({1, 2, 3}), 1), DataError);
    CHECK_THROWS_AS(realized_volatility(series({1, 2, 3}), 4), DataError);
  }

  TEST_CASE("realized volatility: shift invariance and linear scaling") {
    const auto base = testing::simulate_garch({}, 300, 11);
    auto shifted = base, scaled = base;
    for (auto& x : shifted) x += 7.5;
    for (auto& x : scaled) x *= -3.0;
    const auto v0 = realized_volatility(series(base), 5).values;
    const auto v1 = realized_volatility(series(shifted), 5).values;
    const auto v2 = realized_volatility(series(scaled), 5).values;
    for (std::size_t i = 0; i < v0.size(); ++i) {
      CHECK(v1[i] == doctest::Approx(v0[i]).epsilon(1e-9));
      CHECK(v2[i] == doctest::Approx(3.0 * v0[i]).epsilon(1e-12));
    }
  }

  TEST_CASE("window counts") {
    {
      auto [f, v] = index_frame(30);
      CHECK(build_windows(f, v, 22, 1).size() == 8);
      CHECK(build_windows(f, v, 22, 7).size() == 2);
    }
    auto [f, v] = index_frame(22);
    CHECK(error_of([&] { build_windows(f, v, 22, 1); }).find("insufficient length") !=
          std::string::npos);
  }

  TEST_CASE("count identity and no lookahead over many shapes") {
    for (std::size_t L = 3; L <= 40; L += 3) {
      auto [f, v] = index_frame(L);
      for (int w = 1; w <= 12; ++w) {
        for (int h = 1; h <= 5; ++h) {
          if (L < static_cast<std::size_t>(w + h)) {
            CHECK_THROWS_AS(build_windows(f, v, w, h), DataError);
            continue;
          }
          const auto d = build_windows(f, v, w, h);
          REQUIRE(d.size() == L - static_cast<std::size_t>(w + h) + 1);
          for (std::size_t j = 0; j < d.size(); ++j) {
            const auto& s = d.samples[j];
            const double last_input = s.inputs(w - 1, 0);
            const double target_step = s.target - 100.0;
            CHECK(target_step > last_input);
            CHECK(target_step - last_input == h);
            CHECK(s.inputs(0, 0) == last_input - (w - 1));
            CHECK(s.target_date > s.anchor);
            CHECK(s.returns.size() == static_cast<std::size_t>(w));
          }
        }
      }
    }
  }

  TEST_CASE("chronological split") {
    auto [f, v] = index_frame(121);
    const auto d = build_windows(f, v, 21, 1);
    REQUIRE(d.size() == 100);
    auto [tr, va] = chronological_split(d, 0.2);
    CHECK(tr.size() == 80);
    CHECK(va.size() == 20);
    CHECK(tr.samples.back().anchor < va.samples.front().anchor);
    auto [f5, v5] = index_frame(26);
    const auto d5 = build_windows(f5, v5, 21, 1);
    REQUIRE(d5.size() == 5);
    auto [tr5, va5] = chronological_split(d5, 0.2);
    CHECK(tr5.size() == 4);
    CHECK(va5.size() == 1);
    CHECK_THROWS_AS(chronological_split(d, 1.0), ConfigError);
    CHECK_THROWS_AS(chronological_split(d, 0.0), ConfigError);
  }

  TEST_CASE("scaler uses only the fitted prefix") {
    auto [f, v] = index_frame(40);
    auto d = build_windows(f, v, 5, 1);
    const auto sc = FeatureScaler::fit(f, 11);  // rows 0..10
    CHECK(sc.mean[0] == doctest::Approx(5.0));
    CHECK(sc.scale[0] == doctest::Approx(std::sqrt(11.0)));
    sc.apply(d);
    CHECK(d.samples[0].inputs(0, 0) == doctest::Approx(-5.0 / std::sqrt(11.0)));
  }

  TEST_CASE("mean t-test") {
    auto t = mean_t_test(series({1, 2, 3}));
    CHECK(t.statistic == doctest::Approx(2 * std::sqrt(3.0)).epsilon(1e-12));
    t = mean_t_test(series({-1, 1, -1, 1}));
    CHECK(t.statistic == doctest::Approx(0.0));
    CHECK(t.p_value == doctest::Approx(1.0));
    CHECK_THROWS_AS(mean_t_test(series({2, 2, 2})), DataError);
  }

  TEST_CASE("ARCH LM test detects clustering and is scale free") {
    const auto g = testing::simulate_garch({0, 0.05, 0.2, 0.75}, 3000, 5);
    const auto lm = arch_lm_test(series(g), 10);
    CHECK(lm.statistic > 50);
    CHECK(lm.p_value < 1e-6);
    auto scaled = g;
    for (auto& x : scaled) x *= -4.0;
    CHECK(arch_lm_test(series(scaled), 10).statistic == doctest::Approx(lm.statistic).epsilon(1e-9));
    CHECK(error_of([] { arch_lm_test(series(std::vector<double>(50, 1.0)), 5); })
              .find("zero variance") != std::string::npos);
  }

  TEST_CASE("ARCH LM size under iid Gaussian returns") {
    std::mt19937_64 rng(2024);
    std::normal_distribution<double> n(0, 1);
    int rejections = 0;
    for (int rep = 0; rep < 200; ++rep) {
      std::vector<double> x(5000);
      for (auto& v : x) v = n(rng);
      rejections += arch_lm_test(series(x), 10).p_value < 0.05 ? 1 : 0;
    }
    CHECK(rejections >= 2);
    CHECK(rejections <= 20);
  }

  TEST_CASE("diagnostics of a Gaussian sample") {
    std::mt19937_64 rng(9);
    std::normal_distribution<double> n(0, 2);
    std::vector<double> x(20000);
    for (auto& v : x) v = n(rng);
    const auto d = diagnose(series(x), 10);
    CHECK(d.count == 20000);
    CHECK(d.std == doctest::Approx(2.0).epsilon(0.03));
    CHECK(std::abs(d.skewness) < 0.1);
    CHECK(d.kurtosis == doctest::Approx(3.0).epsilon(0.05));
    CHECK(d.lm_stat >= 0);
    CHECK(d.lm_pvalue >= 0);
    CHECK(d.lm_pvalue <= 1);
  }
}
