#include "teamq/layout.hpp"

#include <string>

namespace teamq::env {

int ObservationLayout::slot_of(int observer, int entity) const {
  if (observer < 0 || observer >= n_agents)
    throw ContractViolation("ObservationLayout::slot_of: bad observer " +
                            std::to_string(observer));
  if (entity < 0 || entity >= n_entities() || entity == observer)
    throw ContractViolation("ObservationLayout::slot_of: bad entity " + std::to_string(entity));
  return entity < observer ? entity : entity - 1;
}

int ObservationLayout::entity_at(int observer, int slot) const {
  if (observer < 0 || observer >= n_agents)
    throw ContractViolation("ObservationLayout::entity_at: bad observer " +
                            std::to_string(observer));
  if (slot < 0 || slot >= n_blocks())
    throw ContractViolation("ObservationLayout::entity_at: bad slot " + std::to_string(slot));
  return slot < observer ? slot : slot + 1;
}

void ObservationLayout::validate() const {
  if (n_agents < 1) throw ConfigurationError("ObservationLayout: n_agents must be >= 1");
  if (n_others < 0) throw ConfigurationError("ObservationLayout: n_others must be >= 0");
}

}  // namespace teamq::env
