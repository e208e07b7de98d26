// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "garchrnn/error.hpp"
#include "garchrnn/stats.hpp"

namespace garchrnn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '"'))
    s.remove_prefix(1);
  while (!s.empty() &&
         (s.back() == ' ' || s.back() == '\t' || s.back() == '"' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_csv(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= line.size(); ++i) {
    if (i == line.size() || line[i] == ',') {
      out.push_back(trim(line.substr(start, i - start)));
      start = i + 1;
    }
  }
  return out;
}

bool parse_double(std::string_view s, double& out) {
  if (s.empty()) return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size() && std::isfinite(out);
}

}  // namespace

PriceSeries load_price_csv(const std::filesystem::path& path,
                           const std::string& date_column,
                           const std::string& price_column) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open price file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line) || trim(line).empty())
    throw DataError(path.string() + ": empty CSV, need length >= 2");
  const auto header = split_csv(line);
  auto find_col = [&](const std::string& name) {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
      throw DataError(path.string() + ": missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t date_idx = find_col(date_column);
  const std::size_t price_idx = find_col(price_column);

  std::vector<std::pair<Date, double>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split_csv(line);
    const std::string where = path.string() + ":" + std::to_string(line_no);
    if (fields.size() <= std::max(date_idx, price_idx))
      throw DataError(where + ": too few fields");
    auto date = Date::parse(fields[date_idx]);
    if (!date)
      throw DataError(where + ": unparseable date '" + std::string(fields[date_idx]) + "'");
    double close = 0;
    if (!parse_double(fields[price_idx], close))
      throw DataError(where + ": unparseable price '" + std::string(fields[price_idx]) + "'");
    if (close <= 0)
      throw DataError(where + ": non-positive price " + std::string(fields[price_idx]));
    rows.emplace_back(*date, close);
  }

  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.first < b.first; });
  PriceSeries out;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (i > 0 && rows[i].first == rows[i - 1].first)
      throw DataError(path.string() + ": duplicate date " + rows[i].first.to_string());
    out.dates.push_back(rows[i].first);
    out.closes.push_back(rows[i].second);
  }
  if (out.closes.size() < 2)
    throw DataError(path.string() + ": need length >= 2 price rows, got " +
                    std::to_string(out.closes.size()));
  return out;
}

ReturnSeries log_returns(const PriceSeries& prices, bool percent) {
  if (prices.closes.size() < 2 || prices.dates.size() != prices.closes.size())
    throw DataError("log_returns: need length >= 2 aligned prices");
  const double scale = percent ? 100.0 : 1.0;
  ReturnSeries out;
  out.percent = percent;
  for (std::size_t i = 1; i < prices.closes.size(); ++i) {
    out.dates.push_back(prices.dates[i]);
    out.values.push_back(scale * std::log(prices.closes[i] / prices.closes[i - 1]));
  }
  return out;
}

VolSeries realized_volatility(const ReturnSeries& returns, int k) {
  if (k < 2) throw DataError("realized_volatility: k must be >= 2");
  const std::size_t n = returns.size();
  if (n < static_cast<std::size_t>(k))
    throw DataError("realized_volatility: fewer returns than window length");
  VolSeries out;
  out.k = k;
  for (std::size_t end = static_cast<std::size_t>(k) - 1; end < n; ++end) {
    std::span<const double> window(returns.values.data() + end + 1 - k,
                                   static_cast<std::size_t>(k));
    out.dates.push_back(returns.dates[end]);
    out.values.push_back(std::sqrt(population_variance(window)));
  }
  return out;
}

FeatureFrame default_features(const ReturnSeries& returns, const VolSeries& vol) {
  const std::size_t offset = static_cast<std::size_t>(vol.k) - 1;
  if (returns.size() != vol.values.size() + offset)
    throw DataError("default_features: returns and realized volatility misaligned");
  FeatureFrame f;
  f.names = {"r", "r2", "rv"};
  const std::size_t rows = vol.values.size();
  f.values.resize(static_cast<Eigen::Index>(rows), 3);
  for (std::size_t j = 0; j < rows; ++j) {
    const double r = returns.values[j + offset];
    f.dates.push_back(vol.dates[j]);
    f.raw_returns.push_back(r);
    const auto row = static_cast<Eigen::Index>(j);
    f.values(row, 0) = r;
    f.values(row, 1) = r * r;
    f.values(row, 2) = vol.values[j];
  }
  f.prev_return = offset > 0 ? returns.values[offset - 1] : 0.0;
  return f;
}

WindowedDataset build_windows(const FeatureFrame& features, const VolSeries& targets,
                              int window, int horizon) {
  if (window < 1 || horizon < 1)
    throw DataError("build_windows: window and horizon must be positive");
  if (features.dates != targets.dates)
    throw DataError("build_windows: features and targets are not date-aligned");
  const long L = static_cast<long>(features.rows());
  const long count = L - window - horizon + 1;
  if (count < 1)
    throw DataError("build_windows: insufficient length (L=" + std::to_string(L) +
                    ", w=" + std::to_string(window) + ", h=" + std::to_string(horizon) +
                    ")");
  WindowedDataset ds;
  ds.window = window;
  ds.horizon = horizon;
  ds.samples.reserve(static_cast<std::size_t>(count));
  for (long t = window - 1; t + horizon < L; ++t) {
    const long first = t - window + 1;
    WindowSample s;
    s.anchor = features.dates[static_cast<std::size_t>(t)];
    s.target_date = targets.dates[static_cast<std::size_t>(t + horizon)];
    s.inputs = features.values.middleRows(first, window);
    s.returns.assign(features.raw_returns.begin() + first,
                     features.raw_returns.begin() + t + 1);
    s.prev_return = first > 0 ? features.raw_returns[static_cast<std::size_t>(first - 1)]
                              : features.prev_return;
    s.target = targets.values[static_cast<std::size_t>(t + horizon)];
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::pair<WindowedDataset, WindowedDataset> chronological_split(
    const WindowedDataset& dataset, double val_fraction) {
  if (!(val_fraction > 0.0 && val_fraction < 1.0))
    throw ConfigError("chronological_split: fraction must lie in (0, 1)");
  if (dataset.empty()) throw DataError("chronological_split: empty dataset");
  const std::size_t n = dataset.size();
  const auto n_val =
      static_cast<std::size_t>(std::ceil(static_cast<double>(n) * val_fraction - 1e-12));
  if (n_val >= n)
    throw DataError("chronological_split: dataset too small to leave a training part");
  WindowedDataset train{{}, dataset.window, dataset.horizon};
  WindowedDataset val{{}, dataset.window, dataset.horizon};
  train.samples.assign(dataset.samples.begin(), dataset.samples.end() - static_cast<long>(n_val));
  val.samples.assign(dataset.samples.end() - static_cast<long>(n_val), dataset.samples.end());
  return {std::move(train), std::move(val)};
}

FeatureScaler FeatureScaler::fit(const FeatureFrame& frame, std::size_t rows) {
  if (rows < 2 || rows > frame.rows())
    throw DataError("FeatureScaler: need at least two rows inside the frame");
  FeatureScaler sc;
  const auto block = frame.values.topRows(static_cast<Eigen::Index>(rows));
  for (Eigen::Index c = 0; c < block.cols(); ++c) {
    const double m = block.col(c).mean();
    const double var = (block.col(c).array() - m).square().sum() / static_cast<double>(rows - 1);
    sc.mean.push_back(m);
    sc.scale.push_back(var > 0 ? std::sqrt(var) : 1.0);
  }
  return sc;
}

void FeatureScaler::apply(WindowedDataset& dataset) const {
  for (auto& s : dataset.samples) {
    if (static_cast<std::size_t>(s.inputs.cols()) != mean.size())
      throw DataError("FeatureScaler: feature count mismatch");
    for (Eigen::Index c = 0; c < s.inputs.cols(); ++c) {
      const auto i = static_cast<std::size_t>(c);
      s.inputs.col(c) = (s.inputs.col(c).array() - mean[i]) / scale[i];
    }
  }
}

TestResult arch_lm_test(const ReturnSeries& returns, int lags) {
  if (lags < 1) throw DataError("arch_lm_test: lags must be positive");
  const std::size_t n = returns.size();
  if (n <= static_cast<std::size_t>(lags) + 1)
    throw DataError("arch_lm_test: series too short for the requested lags");
  const double m = mean(returns.values);
  std::vector<double> e2(n);
  for (std::size_t i = 0; i < n; ++i) e2[i] = (returns.values[i] - m) * (returns.values[i] - m);

  const auto rows = static_cast<Eigen::Index>(n - static_cast<std::size_t>(lags));
  Eigen::MatrixXd X(rows, lags + 1);
  Eigen::VectorXd y(rows);
  for (Eigen::Index i = 0; i < rows; ++i) {
    const auto t = static_cast<std::size_t>(i + lags);
    y(i) = e2[t];
    X(i, 0) = 1.0;
    for (int j = 1; j <= lags; ++j) X(i, j) = e2[t - static_cast<std::size_t>(j)];
  }
  const double y_mean = y.mean();
  const double sst = (y.array() - y_mean).square().sum();
  if (!(sst > 0)) throw DataError("arch_lm_test: zero variance in squared residuals");
  const Eigen::VectorXd coef = X.colPivHouseholderQr().solve(y);
  const double sse = (y - X * coef).squaredNorm();
  const double r2 = std::clamp(1.0 - sse / sst, 0.0, 1.0);
  TestResult res;
  res.statistic = static_cast<double>(rows) * r2;
  res.p_value = chi_square_sf(res.statistic, lags);
  return res;
}

TestResult mean_t_test(const ReturnSeries& returns) {
  const std::size_t n = returns.size();
  if (n < 2) throw DataError("mean_t_test: need at least two observations");
  const double var = sample_variance(returns.values);
  if (!(var > 0)) throw DataError("mean_t_test: zero variance");
  TestResult res;
  res.statistic = mean(returns.values) / std::sqrt(var / static_cast<double>(n));
  res.p_value = student_t_two_sided_p(res.statistic, static_cast<double>(n - 1));
  return res;
}

DiagnosticsReport diagnose(const ReturnSeries& returns, int lm_lags) {
  DiagnosticsReport d;
  const auto& v = returns.values;
  d.count = v.size();
  d.mean = mean(v);
  d.std = std::sqrt(sample_variance(v));
  double m2 = 0, m3 = 0, m4 = 0;
  for (double x : v) {
    const double e = x - d.mean;
    m2 += e * e;
    m3 += e * e * e;
    m4 += e * e * e * e;
  }
  const auto n = static_cast<double>(v.size());
  m2 /= n;
  m3 /= n;
  m4 /= n;
  d.skewness = m3 / std::pow(m2, 1.5);
  d.kurtosis = m4 / (m2 * m2);
  const auto lm = arch_lm_test(returns, lm_lags);
  d.lm_stat = lm.statistic;
  d.lm_pvalue = lm.p_value;
  d.lm_lags = lm_lags;
  const auto t = mean_t_test(returns);
  d.t_stat = t.statistic;
  d.t_pvalue = t.p_value;
  return d;
}

}  // namespace garchrnn
