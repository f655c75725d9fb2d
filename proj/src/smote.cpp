#include <algorithm>
#include <map>
#include <random>
#include <string>

#include "affekt/dataset.hpp"
#include "affekt/error.hpp"

namespace affekt {

namespace {

double squared_distance(const std::vector<double>& a, const std::vector<double>& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    d += diff * diff;
  }
  return d;
}

// k nearest same-class members of each member, ties broken by index.
std::vector<std::vector<std::size_t>> nearest_neighbors(const std::vector<std::vector<double>>& points,
                                                        const std::vector<std::size_t>& members, int k) {
  std::vector<std::vector<std::size_t>> out(members.size());
  std::vector<std::pair<double, std::size_t>> dist;
  for (std::size_t i = 0; i < members.size(); ++i) {
    dist.clear();
    for (std::size_t j = 0; j < members.size(); ++j) {
      if (j == i) continue;
      dist.emplace_back(squared_distance(points[members[i]], points[members[j]]), members[j]);
    }
    const auto kk = static_cast<std::ptrdiff_t>(k);
    std::partial_sort(dist.begin(), dist.begin() + kk, dist.end());
    for (std::ptrdiff_t n = 0; n < kk; ++n) out[i].push_back(dist[static_cast<std::size_t>(n)].second);
  }
  return out;
}

}  // namespace

SmoteResult smote_resample(const std::vector<std::vector<double>>& points, const std::vector<int>& classes,
                           const SmoteSpec& spec) {
  if (points.size() != classes.size()) throw Error(ErrorKind::ShapeMismatch, "points and classes differ in length");
  if (spec.k_neighbors < 1) throw Error(ErrorKind::InvalidParams, "SMOTE k_neighbors must be >= 1");
  for (const auto& p : points) {
    if (p.size() != points.front().size()) throw Error(ErrorKind::ShapeMismatch, "SMOTE points differ in dimension");
  }

  SmoteResult out;
  out.points = points;
  out.classes = classes;
  out.origin.assign(points.size(), SmoteOrigin{});

  std::map<int, std::vector<std::size_t>> by_class;
  for (std::size_t i = 0; i < classes.size(); ++i) by_class[classes[i]].push_back(i);
  std::size_t majority = 0;
  for (const auto& [cls, members] : by_class) majority = std::max(majority, members.size());

  std::mt19937_64 rng(spec.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (const auto& [cls, members] : by_class) {
    const std::size_t need = majority - members.size();
    if (need == 0) continue;
    if (members.size() <= static_cast<std::size_t>(spec.k_neighbors)) {
      throw Error(ErrorKind::ClassTooSmall, "class " + std::to_string(cls) + " has " +
                                                std::to_string(members.size()) + " samples; SMOTE with k = " +
                                                std::to_string(spec.k_neighbors) + " needs more than k");
    }
    const auto neighbors = nearest_neighbors(points, members, spec.k_neighbors);
    std::uniform_int_distribution<std::size_t> pick_base(0, members.size() - 1);
    std::uniform_int_distribution<std::size_t> pick_nn(0, static_cast<std::size_t>(spec.k_neighbors) - 1);
    for (std::size_t s = 0; s < need; ++s) {
      const std::size_t b = pick_base(rng);
      const std::size_t base = members[b];
      const std::size_t nn = neighbors[b][pick_nn(rng)];
      const double u = unit(rng);
      std::vector<double> x(points[base].size());
      for (std::size_t d = 0; d < x.size(); ++d) x[d] = points[base][d] + u * (points[nn][d] - points[base][d]);
      out.points.push_back(std::move(x));
      out.classes.push_back(cls);
      out.origin.push_back({true, base, nn, u});
    }
  }
  return out;
}

}  // namespace affekt
