#pragma once

#include <Eigen/Dense>

#include "teamq/errors.hpp"

namespace teamq::env {

using Vector = Eigen::VectorXd;

// Fixed per-agent observation layout shared by every agent of an
// environment:
//
//   [ self block | one relative block per other entity | mask bits ]
//
// The self block is (x, y, scalar). Entities are globally indexed: agents
// first (0..n_agents-1), then the non-agent entities (landmarks or enemies,
// n_agents..n_agents+n_others-1). Agent i's observation carries blocks for
// every entity except itself, allies in ascending index order followed by
// the non-agent entities. Each relative block is
// (visible, rel_x, rel_y, distance, scalar); an entity out of sight (or
// dead) has an all-zero block and a zero mask bit.
struct ObservationLayout {
  int n_agents = 0;
  int n_others = 0;

  static constexpr int kSelfSize = 3;
  static constexpr int kBlockSize = 5;
  static constexpr int kVisible = 0;
  static constexpr int kRelX = 1;
  static constexpr int kRelY = 2;
  static constexpr int kDistance = 3;
  static constexpr int kScalar = 4;

  int n_entities() const { return n_agents + n_others; }
  int n_blocks() const { return n_entities() - 1; }
  int dim() const { return kSelfSize + (kBlockSize + 1) * n_blocks(); }

  // slot of entity `entity` (global index) in observer's block list
  int slot_of(int observer, int entity) const;
  // global entity index held by `slot` of observer's block list
  int entity_at(int observer, int slot) const;

  int block_offset(int slot) const { return kSelfSize + kBlockSize * slot; }
  int mask_offset(int slot) const {
    return kSelfSize + kBlockSize * n_blocks() + slot;
  }

  bool mask_bit(const Vector& obs, int observer, int entity) const {
    return obs[mask_offset(slot_of(observer, entity))] != 0.0;
  }

  void validate() const;
};

}  // namespace teamq::env
