#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace teamq::metrics {

// One evaluation checkpoint. win_rate carries the environment's episode
// metric: win rate on combat tasks, final landmark occupancy on navigation.
struct Row {
  long step = 0;
  long episode = 0;
  double eval_return = 0.0;
  double win_rate = 0.0;
  double mean_r_am = 0.0;
  double mean_r_int = 0.0;
  double loss_g = 0.0;
  double grad_check_resid = 0.0;
  double epsilon = 0.0;
  std::uint64_t seed = 0;
};

inline constexpr const char* kCsvHeader =
    "step,episode,eval_return,win_rate,mean_r_am,mean_r_int,loss_g,"
    "grad_check_resid,epsilon,seed";

std::string to_csv_line(const Row& row);

struct Series {
  std::filesystem::path path;
  std::vector<Row> rows;
};

Series read_csv(const std::filesystem::path& path);

// Quantile with linear interpolation at rank q * (n - 1); q in [0, 1].
double quantile(std::vector<double> values, double q);

}  // namespace teamq::metrics
