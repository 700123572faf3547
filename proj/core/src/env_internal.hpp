#pragma once

#include <memory>

#include "teamq/env.hpp"

namespace teamq::env {

std::unique_ptr<Environment> make_spread(const SpreadConfig& config);
std::unique_ptr<Environment> make_focusfire(const FocusFireConfig& config);

// movement actions shared by both environments
// 0 = stay / no-op, 1 = +y, 2 = -y, 3 = -x, 4 = +x
inline constexpr int kMoveActions = 5;
Eigen::Vector2d move_delta(int action);

}  // namespace teamq::env
