#include "teamq/imagine.hpp"

#include <cmath>
#include <string>

#include "teamq/errors.hpp"

namespace teamq::imagine {

using L = ObservationLayout;

std::vector<int> surrounding_set(const ObservationLayout& layout, const Vector& obs,
                                 int observer) {
  layout.validate();
  if (obs.size() != layout.dim())
    throw ContractViolation("surrounding_set: observation length does not match layout");
  std::vector<int> set;
  for (int j = 0; j < layout.n_agents; ++j) {
    if (j == observer) continue;
    if (layout.mask_bit(obs, observer, j)) set.push_back(j);
  }
  return set;
}

Vector imagine_observation(const ObservationLayout& layout, double sight_radius,
                           const Vector& obs, int observer, int target) {
  layout.validate();
  if (obs.size() != layout.dim())
    throw ContractViolation("imagine_observation: observation length does not match layout");
  if (target < 0 || target >= layout.n_agents)
    throw ContractViolation("imagine_observation: bad target agent " + std::to_string(target));
  if (target == observer) return obs;
  if (!layout.mask_bit(obs, observer, target))
    throw ContractViolation("imagine_observation: target " + std::to_string(target) +
                            " is not visible to observer " + std::to_string(observer));

  const int target_off = layout.block_offset(layout.slot_of(observer, target));
  const double target_rel_x = obs[target_off + L::kRelX];
  const double target_rel_y = obs[target_off + L::kRelY];

  Vector out = Vector::Zero(layout.dim());
  // self block describes the target; its absolute position is recovered
  // from the observer's own absolute position plus the relative offset
  out[0] = obs[0] + target_rel_x;
  out[1] = obs[1] + target_rel_y;
  out[2] = obs[target_off + L::kScalar];

  auto place = [&](int entity, double rel_x, double rel_y, double scalar) {
    const double dx = rel_x - target_rel_x;
    const double dy = rel_y - target_rel_y;
    const double dist = std::hypot(dx, dy);
    if (dist > sight_radius) return;  // outside the target's receptive field
    const int slot = layout.slot_of(target, entity);
    const int off = layout.block_offset(slot);
    out[off + L::kVisible] = 1.0;
    out[off + L::kRelX] = dx;
    out[off + L::kRelY] = dy;
    out[off + L::kDistance] = dist;
    out[off + L::kScalar] = scalar;
    out[layout.mask_offset(slot)] = 1.0;
  };

  // the observer itself sits at the origin of its own frame
  place(observer, 0.0, 0.0, obs[2]);
  for (int slot = 0; slot < layout.n_blocks(); ++slot) {
    const int entity = layout.entity_at(observer, slot);
    if (entity == target) continue;
    const int off = layout.block_offset(slot);
    if (obs[layout.mask_offset(slot)] == 0.0) continue;  // invisible to the observer
    place(entity, obs[off + L::kRelX], obs[off + L::kRelY], obs[off + L::kScalar]);
  }
  return out;
}

}  // namespace teamq::imagine
