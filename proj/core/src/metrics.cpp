#include "teamq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "teamq/errors.hpp"

namespace teamq::metrics {

std::string to_csv_line(const Row& row) {
  char buf[512];
  std::snprintf(buf, sizeof(buf), "%ld,%ld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu",
                row.step, row.episode, row.eval_return, row.win_rate, row.mean_r_am,
                row.mean_r_int, row.loss_g, row.grad_check_resid, row.epsilon,
                static_cast<unsigned long long>(row.seed));
  return std::string(buf);
}

Series read_csv(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw ConfigurationError("read_csv: cannot open '" + path.string() + "'");
  Series series;
  series.path = path;
  std::string line;
  if (!std::getline(is, line))
    throw ConfigurationError("read_csv: empty file '" + path.string() + "'");
  if (line != kCsvHeader)
    throw ConfigurationError("read_csv: unexpected header in '" + path.string() + "'");
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (fields.size() != 10)
      throw ConfigurationError("read_csv: malformed row in '" + path.string() + "'");
    Row row;
    row.step = std::stol(fields[0]);
    row.episode = std::stol(fields[1]);
    row.eval_return = std::stod(fields[2]);
    row.win_rate = std::stod(fields[3]);
    row.mean_r_am = std::stod(fields[4]);
    row.mean_r_int = std::stod(fields[5]);
    row.loss_g = std::stod(fields[6]);
    row.grad_check_resid = std::stod(fields[7]);
    row.epsilon = std::stod(fields[8]);
    row.seed = std::stoull(fields[9]);
    series.rows.push_back(row);
  }
  return series;
}

double quantile(std::vector<double> values, double q) {
  if (values.empty()) throw ContractViolation("quantile: empty sample");
  if (q < 0.0 || q > 1.0) throw ContractViolation("quantile: q must be in [0, 1]");
  std::sort(values.begin(), values.end());
  const double rank = q * static_cast<double>(values.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(rank));
  const auto hi = static_cast<std::size_t>(std::ceil(rank));
  if (lo == hi) return values[lo];
  const double w = rank - static_cast<double>(lo);
  return values[lo] * (1.0 - w) + values[hi] * w;
}

}  // namespace teamq::metrics
