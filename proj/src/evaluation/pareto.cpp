#include "emnh/evaluation/pareto.hpp"

#include "emnh/core/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace emnh::eval {

std::vector<Vector> ParetoSet::objectives() const {
  std::vector<Vector> out;
  out.reserve(points.size());
  for (const auto& p : points) out.push_back(p.f);
  return out;
}

namespace {

Vector oriented(const Vector& f, Sense sense) { return sense == Sense::maximize ? Vector(-f) : f; }

bool lex_less(const Vector& a, const Vector& b) {
  return std::lexicographical_compare(a.data(), a.data() + a.size(), b.data(), b.data() + b.size());
}

// Minimization-oriented dominance or equality.
bool weakly_dominates(const Vector& u, const Vector& v) { return (u.array() <= v.array()).all(); }

std::string format_point(const Vector& f) {
  std::ostringstream os;
  os.precision(10);
  os << "(";
  for (Eigen::Index m = 0; m < f.size(); ++m) os << (m ? ", " : "") << f(m);
  os << ")";
  return os.str();
}

double hv_min(std::vector<Vector> pts, const Vector& r) {
  const Eigen::Index k = r.size();
  if (pts.empty()) return 0.0;
  if (k == 1) {
    double best = r(0);
    for (const auto& p : pts) best = std::min(best, p(0));
    return r(0) - best;
  }
  if (k == 2) {
    std::sort(pts.begin(), pts.end(), lex_less);
    double area = 0.0, ybest = r(1);
    for (const auto& p : pts)
      if (p(1) < ybest) {
        area += (r(0) - p(0)) * (ybest - p(1));
        ybest = p(1);
      }
    return area;
  }
  std::sort(pts.begin(), pts.end(), [k](const Vector& a, const Vector& b) { return a(k - 1) < b(k - 1); });
  double vol = 0.0;
  std::vector<Vector> slice;
  const Vector rk = r.head(k - 1);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    slice.push_back(pts[i].head(k - 1));
    const double hi = i + 1 < pts.size() ? pts[i + 1](k - 1) : r(k - 1);
    const double depth = hi - pts[i](k - 1);
    if (depth > 0.0) vol += depth * hv_min(pareto_filter(slice, Sense::minimize), rk);
  }
  return vol;
}

}  // namespace

bool dominates(const Vector& u, const Vector& v, Sense sense) {
  const Vector a = oriented(u, sense), b = oriented(v, sense);
  return weakly_dominates(a, b) && (a.array() < b.array()).any();
}

ParetoSet pareto_filter(std::vector<ParetoPoint> points, Sense sense) {
  std::vector<std::size_t> order(points.size());
  std::vector<Vector> keys;
  keys.reserve(points.size());
  for (const auto& p : points) keys.push_back(oriented(p.f, sense));
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return lex_less(keys[a], keys[b]); });
  // After a lexicographic sort a point can only be dominated by, or equal to, an earlier one.
  ParetoSet out;
  out.sense = sense;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    bool beaten = false;
    for (std::size_t j : kept)
      if (weakly_dominates(keys[j], keys[idx])) {
        beaten = true;
        break;
      }
    if (!beaten) kept.push_back(idx);
  }
  for (std::size_t idx : kept) out.points.push_back(std::move(points[idx]));
  return out;
}

std::vector<Vector> pareto_filter(const std::vector<Vector>& points, Sense sense) {
  std::vector<ParetoPoint> pts;
  pts.reserve(points.size());
  for (const auto& f : points) pts.push_back(ParetoPoint{f, -1, -1, -1, {}});
  return pareto_filter(std::move(pts), sense).objectives();
}

double hypervolume(const std::vector<Vector>& front, const Vector& reference, Sense sense) {
  const Vector r = oriented(reference, sense);
  std::vector<Vector> pts;
  pts.reserve(front.size());
  for (const auto& f : front) {
    if (f.size() != reference.size()) throw ShapeError("front point and reference point dimensions differ");
    Vector p = oriented(f, sense);
    if ((p.array() > r.array()).any())
      throw DataError("point " + format_point(f) + " lies beyond the reference point " + format_point(reference));
    pts.push_back(std::move(p));
  }
  return hv_min(pareto_filter(pts, Sense::minimize), r);
}

double hv_ratio(const std::vector<Vector>& front, const Vector& reference, const Vector& ideal, Sense sense) {
  const double box = (reference - ideal).cwiseAbs().prod();
  if (!(box > 0.0)) throw UsageError("reference and ideal points span a degenerate box");
  return hypervolume(front, reference, sense) / box;
}

McEstimate mc_hypervolume(const std::vector<Vector>& front, const Vector& reference, const Vector& ideal,
                          std::int64_t samples, std::uint64_t seed, Sense sense) {
  if (samples < 1) throw UsageError("Monte-Carlo hypervolume needs at least one sample");
  const Vector hi = oriented(reference, sense), lo = oriented(ideal, sense);
  const Eigen::Index M = hi.size();
  if (!(lo.array() < hi.array()).all()) throw UsageError("ideal point must be strictly better than the reference");
  const double box = (hi - lo).prod();
  std::vector<Vector> pts;
  for (const auto& f : front) pts.push_back(oriented(f, sense));

  // Two objectives: sort by the first and keep prefix minima of the second.
  std::vector<double> xs, prefix_min;
  if (M == 2) {
    std::sort(pts.begin(), pts.end(), lex_less);
    double m = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
      xs.push_back(p(0));
      m = std::min(m, p(1));
      prefix_min.push_back(m);
    }
  }
  Rng rng(seed);
  Vector x(M);
  std::int64_t hits = 0;
  for (std::int64_t s = 0; s < samples; ++s) {
    for (Eigen::Index m = 0; m < M; ++m) x(m) = rng.uniform(lo(m), hi(m));
    bool covered = false;
    if (M == 2) {
      const auto it = std::upper_bound(xs.begin(), xs.end(), x(0));
      if (it != xs.begin()) covered = prefix_min[static_cast<std::size_t>(it - xs.begin() - 1)] <= x(1);
    } else {
      for (const auto& p : pts)
        if (weakly_dominates(p, x)) {
          covered = true;
          break;
        }
    }
    hits += covered;
  }
  const double frac = static_cast<double>(hits) / static_cast<double>(samples);
  return {frac * box, box * std::sqrt(frac * (1.0 - frac) / static_cast<double>(samples))};
}

double gap(double hv, double hv_reference) {
  if (hv_reference == 0.0) throw UsageError("gap relative to a zero hypervolume");
  return (hv_reference - hv) / hv_reference;
}

}  // namespace emnh::eval
