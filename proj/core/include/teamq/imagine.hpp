#pragma once

#include <vector>

#include "teamq/layout.hpp"

namespace teamq::imagine {

using env::ObservationLayout;
using env::Vector;

// Agent indices visible in the observer's observation, ascending. The
// observer itself is never a member.
std::vector<int> surrounding_set(const ObservationLayout& layout, const Vector& obs,
                                 int observer);

// Re-centers the observer's observation at visible agent `target`,
// producing the observation `target` would plausibly have: every entity's
// relative coordinates are re-expressed with `target` at the origin,
// distances and visibility are recomputed against `target`'s sight radius,
// and entities the observer cannot see stay zeroed (the receptive fields
// intersect). Non-positional scalars are copied verbatim; the self block
// describes `target`. Requires no learned parameters.
//
// target == observer returns the observation unchanged. A target that is
// not visible to the observer is a contract violation.
Vector imagine_observation(const ObservationLayout& layout, double sight_radius,
                           const Vector& obs, int observer, int target);

}  // namespace teamq::imagine
