// SPDX-License-Identifier: Apache-2.0
#include "garchrnn/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "garchrnn/error.hpp"

namespace garchrnn {

namespace fs = std::filesystem;

std::string format_double(double v) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string format_optional(const std::optional<double>& v) {
  return v ? format_double(*v) : "NA";
}

void write_text_file(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw DataError("failed writing " + path.string());
}

void write_forecast_csv(const fs::path& path, const std::vector<ForecastRecord>& records) {
  std::ostringstream os;
  os << "model_id,seed,horizon,anchor_date,predicted_sigma,realized_sigma\n";
  for (const auto& r : records)
    os << r.model_id << ',' << r.seed << ',' << r.horizon << ',' << r.anchor_date.to_string()
       << ',' << format_double(r.predicted_sigma) << ',' << format_double(r.realized_sigma)
       << '\n';
  write_text_file(path, os.str());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

template <class T>
T parse_number(const std::string& s, const std::string& where) {
  T v{};
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size())
    throw DataError(where + ": cannot parse '" + s + "'");
  return v;
}

}  // namespace

std::vector<ForecastRecord> read_forecast_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("missing forecast file " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw DataError(path.string() + ": empty file");
  if (split(line) != std::vector<std::string>{"model_id", "seed", "horizon", "anchor_date",
                                              "predicted_sigma", "realized_sigma"})
    throw DataError(path.string() + ": unexpected header");
  std::vector<ForecastRecord> out;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const std::string where = path.string() + ":" + std::to_string(lineno);
    const auto f = split(line);
    if (f.size() != 6) throw DataError(where + ": expected 6 fields");
    ForecastRecord r;
    r.model_id = f[0];
    r.seed = parse_number<std::uint64_t>(f[1], where);
    r.horizon = parse_number<int>(f[2], where);
    const auto d = Date::parse(f[3]);
    if (!d) throw DataError(where + ": bad date '" + f[3] + "'");
    r.anchor_date = *d;
    r.predicted_sigma = parse_number<double>(f[4], where);
    r.realized_sigma = parse_number<double>(f[5], where);
    out.push_back(std::move(r));
  }
  return out;
}

void write_returns_csv(const fs::path& path, const ReturnSeries& returns, const VolSeries& vol) {
  std::ostringstream os;
  os << "date,return,realized_vol\n";
  const std::size_t offset = returns.size() - vol.values.size();
  for (std::size_t i = 0; i < returns.size(); ++i) {
    os << returns.dates[i].to_string() << ',' << format_double(returns.values[i]) << ',';
    os << (i >= offset ? format_double(vol.values[i - offset]) : "NA") << '\n';
  }
  write_text_file(path, os.str());
}

void write_features_csv(const fs::path& path, const FeatureFrame& frame) {
  std::ostringstream os;
  os << "date";
  for (const auto& n : frame.names) os << ',' << n;
  os << '\n';
  for (std::size_t i = 0; i < frame.rows(); ++i) {
    os << frame.dates[i].to_string();
    for (Eigen::Index c = 0; c < frame.values.cols(); ++c)
      os << ',' << format_double(frame.values(static_cast<Eigen::Index>(i), c));
    os << '\n';
  }
  write_text_file(path, os.str());
}

void write_dataset_csv(const fs::path& path, const WindowedDataset& dataset,
                       const std::vector<std::string>& feature_names) {
  std::ostringstream os;
  os << "anchor_date,target_date";
  for (const auto& n : feature_names) os << ',' << n;
  os << ",target\n";
  for (const auto& s : dataset.samples) {
    os << s.anchor.to_string() << ',' << s.target_date.to_string();
    const Eigen::Index last = s.inputs.rows() - 1;
    for (Eigen::Index c = 0; c < s.inputs.cols(); ++c) os << ',' << format_double(s.inputs(last, c));
    os << ',' << format_double(s.target) << '\n';
  }
  write_text_file(path, os.str());
}

void write_per_seed_metrics_csv(const fs::path& path, const std::vector<MetricsReport>& reports) {
  std::ostringstream os;
  os << "model_id,seed,horizon,subset,n,mse,mae,smape,oos_r2\n";
  for (const auto& r : reports)
    os << r.model_id << ',' << r.seed << ',' << r.horizon << ',' << r.subset << ',' << r.n << ','
       << format_double(r.mse) << ',' << format_double(r.mae) << ',' << format_double(r.smape)
       << ',' << format_optional(r.oos_r2) << '\n';
  write_text_file(path, os.str());
}

void write_aggregate_metrics_csv(const fs::path& path,
                                 const std::vector<SeedAggregate>& aggregates) {
  std::ostringstream os;
  os << "model_id,horizon,subset,metric,mean,std,n_seeds\n";
  for (const auto& a : aggregates) {
    const std::pair<const char*, const MetricSummary*> rows[] = {
        {"mse", &a.mse}, {"mae", &a.mae}, {"smape", &a.smape}, {"oos_r2", &a.oos_r2}};
    for (const auto& [name, m] : rows)
      os << a.model_id << ',' << a.horizon << ',' << a.subset << ',' << name << ','
         << format_double(m->mean) << ',' << format_optional(m->std) << ',' << a.n_seeds << '\n';
  }
  write_text_file(path, os.str());
}

void write_var_csv(const fs::path& path, const BacktestReport& report) {
  std::ostringstream os;
  os << "date,return,var,violation,pinball\n";
  for (const auto& r : report.rows)
    os << r.date.to_string() << ',' << format_double(r.realized) << ',' << format_double(r.var)
       << ',' << (r.violation ? 1 : 0) << ',' << format_double(r.pinball) << '\n';
  write_text_file(path, os.str());
}

}  // namespace garchrnn
