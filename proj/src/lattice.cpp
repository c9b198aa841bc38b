#include "imcgl/lattice.hpp"

#include <map>
#include <memory>
#include <mutex>

#include "imcgl/errors.hpp"

namespace imcgl {

Lattice::Lattice(int grid_radius) : radius_(grid_radius) {
  if (grid_radius < 1) throw GridError("grid radius must be at least 1");
  const Eigen::Index s = side();
  a_eig_.resize(s * s * s);
  for (Eigen::Index i = 0; i < a_eig_.size(); ++i) a_eig_[i] = mode(i).a_eig();
}

const Lattice& Lattice::of(int grid_radius) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<Lattice>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[grid_radius];
  if (!slot) slot = std::make_unique<Lattice>(grid_radius);
  return *slot;
}

bool Lattice::contains(const ModeIndex& n) const {
  return std::abs(n.k) <= radius_ && std::abs(n.l) <= radius_ && std::abs(n.m) <= radius_;
}

Eigen::Index Lattice::index(const ModeIndex& n) const {
  if (!contains(n)) throw GridError("mode outside the grid cube");
  const Eigen::Index s = side();
  return (Eigen::Index(n.k + radius_) * s + (n.l + radius_)) * s + (n.m + radius_);
}

ModeIndex Lattice::mode(Eigen::Index i) const {
  const Eigen::Index s = side();
  const int m = int(i % s) - radius_;
  const int l = int((i / s) % s) - radius_;
  const int k = int(i / (s * s)) - radius_;
  return {k, l, m};
}

}  // namespace imcgl
