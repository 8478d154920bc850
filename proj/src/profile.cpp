#include "ncsr/profile.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <sstream>

namespace ncsr {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

}  // namespace

ProfileCurve ProfileCurve::make(std::vector<Piece> pieces, double z_hi) {
  std::vector<std::string> bad;
  if (pieces.empty()) {
    throw ProfileError("profile has no pieces", {"empty piece list"});
  }
  for (size_t i = 0; i + 1 < pieces.size(); ++i) {
    if (!(pieces[i].z_left < pieces[i + 1].z_left)) {
      bad.push_back("breakpoints not strictly ascending at index " + std::to_string(i + 1));
    }
  }
  if (!(pieces.front().z_left < z_hi)) {
    bad.push_back("window is degenerate: z_hi <= first breakpoint");
  }

  // C^0 / C^1 continuity at interior breakpoints, relative tolerance 1e-10.
  for (size_t i = 0; i + 1 < pieces.size(); ++i) {
    double e = pieces[i + 1].z_left;
    double v0 = pieces[i].p.eval(e), v1 = pieces[i + 1].p.eval(e);
    double s0 = pieces[i].p.deriv().eval(e), s1 = pieces[i + 1].p.deriv().eval(e);
    double vscale = std::max({1.0, std::abs(v0), std::abs(v1)});
    double sscale = std::max({1.0, std::abs(s0), std::abs(s1)});
    if (std::abs(v0 - v1) > 1e-10 * vscale) {
      bad.push_back("value mismatch at breakpoint z=" + fmt(e) + " (" + fmt(v0) +
                    " vs " + fmt(v1) + ")");
    }
    if (std::abs(s0 - s1) > 1e-10 * sscale) {
      bad.push_back("slope mismatch at breakpoint z=" + fmt(e) + " (" + fmt(s0) +
                    " vs " + fmt(s1) + ")");
    }
  }
  if (!bad.empty()) throw ProfileError("invalid profile", bad);

  ProfileCurve prof;
  prof.pieces_ = std::move(pieces);
  prof.z_lo_ = prof.pieces_.front().z_left;
  prof.z_hi_ = z_hi;
  prof.ext_lo_v_ = prof.rho_raw(prof.z_lo_, 0);
  prof.ext_lo_s_ = prof.rho_raw(prof.z_lo_, 1);
  prof.ext_hi_v_ = prof.rho_raw(prof.z_hi_, 0);
  prof.ext_hi_s_ = prof.rho_raw(prof.z_hi_, 1);

  prof.compute_critical_points();

  if (prof.crit_.empty()) {
    throw ProfileError("invalid profile", {"no critical point inside the window"});
  }
  if (prof.crit_.front().kind != CriticalPoint::Kind::kMinimum ||
      prof.crit_.back().kind != CriticalPoint::Kind::kMinimum) {
    throw ProfileError("invalid profile",
                       {"window must start and end on descending/ascending slopes "
                        "(outermost critical points must be minima); widen the window"});
  }
  prof.build_topology();
  return prof;
}

double ProfileCurve::rho_raw(double z, int k) const {
  // Find the last piece with z_left <= z (first piece covers everything left).
  size_t idx = 0;
  for (size_t i = 1; i < pieces_.size(); ++i) {
    if (pieces_[i].z_left <= z) idx = i;
    else break;
  }
  Poly p = pieces_[idx].p;
  for (int j = 0; j < k; ++j) p = p.deriv();
  return p.eval(z);
}

double ProfileCurve::rho_k(double z, int k) const {
  if (z < z_lo_) {
    double t = z - z_lo_;
    switch (k) {
      case 0: return ext_lo_v_ + ext_lo_s_ * t + t * t;
      case 1: return ext_lo_s_ + 2.0 * t;
      case 2: return 2.0;
      default: return 0.0;
    }
  }
  if (z > z_hi_) {
    double t = z - z_hi_;
    switch (k) {
      case 0: return ext_hi_v_ + ext_hi_s_ * t + t * t;
      case 1: return ext_hi_s_ + 2.0 * t;
      case 2: return 2.0;
      default: return 0.0;
    }
  }
  return rho_raw(z, k);
}

double ProfileCurve::global_min_value() const {
  double v = kInf;
  for (const auto& cp : crit_) {
    if (cp.kind == CriticalPoint::Kind::kMinimum) v = std::min(v, cp.value);
  }
  return v;
}

void ProfileCurve::compute_critical_points() {
  std::vector<double> roots;
  for (size_t i = 0; i < pieces_.size(); ++i) {
    double a = std::max(pieces_[i].z_left, z_lo_);
    double b = (i + 1 < pieces_.size()) ? pieces_[i + 1].z_left : z_hi_;
    if (!(a < b)) continue;
    Poly dp = pieces_[i].p.deriv();
    for (double r : real_roots_in(dp, a, b)) roots.push_back(r);
  }
  std::sort(roots.begin(), roots.end());
  std::vector<double> ded;
  double span = z_hi_ - z_lo_;
  for (double r : roots) {
    if (ded.empty() || r - ded.back() > 1e-9 * span) ded.push_back(r);
  }

  crit_.clear();
  for (size_t i = 0; i < ded.size(); ++i) {
    double r = ded[i];
    double left_gap = (i == 0) ? (r - z_lo_) : (r - ded[i - 1]);
    double right_gap = (i + 1 == ded.size()) ? (z_hi_ - r) : (ded[i + 1] - r);
    double d = 0.5 * std::min({left_gap, right_gap, 1e-4 * span});
    if (d <= 0.0) continue;
    double sl = rho_raw(r - d, 1);
    double sr = rho_raw(r + d, 1);
    CriticalPoint cp;
    cp.z = r;
    cp.value = rho_raw(r, 0);
    if (sl < 0.0 && sr > 0.0) {
      cp.kind = CriticalPoint::Kind::kMinimum;
    } else if (sl > 0.0 && sr < 0.0) {
      cp.kind = CriticalPoint::Kind::kMaximum;
    } else {
      continue;  // monotone inflection, not a topology event
    }
    crit_.push_back(cp);
  }
}

std::vector<std::pair<double, double>> ProfileCurve::level_components(double y) const {
  // All crossings of the level y inside the window, plus extension crossings
  // when the curve is still below y at a window edge.
  std::vector<double> cross;
  for (size_t i = 0; i < pieces_.size(); ++i) {
    double a = std::max(pieces_[i].z_left, z_lo_);
    double b = (i + 1 < pieces_.size()) ? pieces_[i + 1].z_left : z_hi_;
    if (!(a < b)) continue;
    Poly shifted = pieces_[i].p;
    if (shifted.c.empty()) shifted.c.push_back(0.0);
    shifted.c[0] -= y;
    for (double r : real_roots_in(shifted, a, b)) cross.push_back(r);
  }
  double lo_edge = z_lo_, hi_edge = z_hi_;
  if (rho(z_lo_) < y) {
    // Continue into the left extension: v + s t + t^2 = y, t < 0.
    double s = ext_lo_s_, v = ext_lo_v_;
    double disc = s * s - 4.0 * (v - y);
    if (disc > 0.0) lo_edge = z_lo_ + (-s - std::sqrt(disc)) / 2.0;
    cross.push_back(lo_edge);
  }
  if (rho(z_hi_) < y) {
    double s = ext_hi_s_, v = ext_hi_v_;
    double disc = s * s - 4.0 * (v - y);
    if (disc > 0.0) hi_edge = z_hi_ + (-s + std::sqrt(disc)) / 2.0;
    cross.push_back(hi_edge);
  }
  std::sort(cross.begin(), cross.end());
  std::vector<double> ded;
  double span = std::max(1.0, hi_edge - lo_edge);
  for (double r : cross) {
    if (ded.empty() || r - ded.back() > 1e-11 * span) ded.push_back(r);
  }

  std::vector<std::pair<double, double>> segs;
  for (size_t i = 0; i + 1 < ded.size(); ++i) {
    double mid = 0.5 * (ded[i] + ded[i + 1]);
    if (rho(mid) < y) {
      if (!segs.empty() && std::abs(segs.back().second - ded[i]) < 1e-11 * span) {
        segs.back().second = ded[i + 1];  // shared touching point: keep one component
      } else {
        segs.push_back({ded[i], ded[i + 1]});
      }
    }
  }
  // Isolated touching minima (level exactly at a minimum value).
  for (const auto& cp : crit_) {
    if (cp.kind != CriticalPoint::Kind::kMinimum) continue;
    if (std::abs(cp.value - y) <= 1e-12 * std::max(1.0, std::abs(y))) {
      bool covered = false;
      for (const auto& s : segs) {
        if (cp.z >= s.first - 1e-11 && cp.z <= s.second + 1e-11) covered = true;
      }
      if (!covered) segs.push_back({cp.z, cp.z});
    }
  }
  std::sort(segs.begin(), segs.end());
  return segs;
}

void ProfileCurve::build_topology() {
  struct Node {
    TopologyInterval ti;
    std::vector<int> children;  // indices into build list
  };
  std::vector<Node> nodes;

  // Active components left-to-right: (leftmost minimum z, node index).
  struct Comp {
    double left_min;
    std::vector<double> minima;
    int node;
  };
  std::vector<Comp> comps;

  std::vector<CriticalPoint> minima, maxima;
  for (const auto& cp : crit_) {
    (cp.kind == CriticalPoint::Kind::kMinimum ? minima : maxima).push_back(cp);
  }

  // Births: one component and one branch per minimum.
  std::sort(minima.begin(), minima.end(),
            [](const CriticalPoint& a, const CriticalPoint& b) { return a.z < b.z; });
  for (const auto& mn : minima) {
    Node nd;
    nd.ti.z2 = nd.ti.z3 = mn.z;
    nd.ti.birth = mn.value;
    nd.ti.death = kInf;
    nd.ti.minima = {mn.z};
    comps.push_back({mn.z, {mn.z}, static_cast<int>(nodes.size())});
    nodes.push_back(std::move(nd));
  }

  // Coalescences by ascending barrier value; equal values processed together.
  std::sort(maxima.begin(), maxima.end(), [](const CriticalPoint& a, const CriticalPoint& b) {
    return a.value < b.value || (a.value == b.value && a.z < b.z);
  });
  double vscale = std::max(1.0, std::abs(global_min_value()));
  for (const auto& mx : maxima) vscale = std::max(vscale, std::abs(mx.value));

  size_t i = 0;
  while (i < maxima.size()) {
    size_t j = i;
    while (j + 1 < maxima.size() &&
           std::abs(maxima[j + 1].value - maxima[i].value) <= 1e-12 * vscale) {
      ++j;
    }
    double level = maxima[i].value;

    // Union the components adjacent to each barrier in this equal-value group.
    std::sort(comps.begin(), comps.end(),
              [](const Comp& a, const Comp& b) { return a.left_min < b.left_min; });
    std::vector<int> group(comps.size());
    std::iota(group.begin(), group.end(), 0);
    auto find = [&](int x) {
      while (group[static_cast<size_t>(x)] != x) x = group[static_cast<size_t>(x)];
      return x;
    };
    for (size_t k = i; k <= j; ++k) {
      double bz = maxima[k].z;
      // Left neighbor: last component entirely left of bz; right neighbor: next.
      int li = -1, ri = -1;
      for (size_t q = 0; q < comps.size(); ++q) {
        if (comps[q].left_min < bz) li = static_cast<int>(q);
        if (comps[q].left_min > bz && ri < 0) ri = static_cast<int>(q);
      }
      if (li < 0 || ri < 0) continue;  // barrier at the window edge; ignore
      int a = find(li), b = find(ri);
      if (a != b) group[static_cast<size_t>(std::max(a, b))] = std::min(a, b);
    }

    std::map<int, std::vector<size_t>> merged;
    for (size_t q = 0; q < comps.size(); ++q) merged[find(static_cast<int>(q))].push_back(q);

    std::vector<Comp> next_comps;
    for (auto& [root, members] : merged) {
      (void)root;
      if (members.size() == 1) {
        next_comps.push_back(comps[members[0]]);
        continue;
      }
      Node parent;
      parent.ti.birth = level;
      parent.ti.death = kInf;
      Comp nc;
      nc.node = static_cast<int>(nodes.size());
      nc.left_min = kInf;
      for (size_t q : members) {
        nodes[static_cast<size_t>(comps[q].node)].ti.death = level;
        parent.children.push_back(comps[q].node);
        parent.ti.minima.insert(parent.ti.minima.end(), comps[q].minima.begin(),
                                comps[q].minima.end());
        nc.minima.insert(nc.minima.end(), comps[q].minima.begin(), comps[q].minima.end());
        nc.left_min = std::min(nc.left_min, comps[q].left_min);
      }
      std::sort(parent.ti.minima.begin(), parent.ti.minima.end());
      std::sort(nc.minima.begin(), nc.minima.end());
      // Barrier location(s) at this level between the children: keep the first.
      for (size_t k = i; k <= j; ++k) {
        double bz = maxima[k].z;
        if (bz > nc.minima.front() && bz < nc.minima.back()) {
          if (!parent.ti.z5) parent.ti.z5 = bz;
        }
      }
      // Extent at the coalescence level.
      auto segs = level_components(level);
      for (const auto& s : segs) {
        if (nc.minima.front() >= s.first - 1e-11 && nc.minima.back() <= s.second + 1e-11) {
          parent.ti.z2 = s.first;
          parent.ti.z3 = s.second;
          break;
        }
      }
      next_comps.push_back(nc);
      nodes.push_back(std::move(parent));
    }
    comps = std::move(next_comps);
    i = j + 1;
  }

  if (comps.size() != 1) {
    throw ProfileError("invalid profile",
                       {"sublevel components do not merge into a single root; "
                        "widen the window (" +
                        std::to_string(comps.size()) + " components remain)"});
  }
  int root = comps[0].node;
  nodes[static_cast<size_t>(root)].ti.z1 = -kInf;
  nodes[static_cast<size_t>(root)].ti.z4 = kInf;

  // Outer extents [z1, z4] of every non-root branch: the sub-segment of the
  // parent's extent at the death level containing the branch's minima.
  for (auto& nd : nodes) {
    for (int ch : nd.children) {
      Node& c = nodes[static_cast<size_t>(ch)];
      double death = c.ti.death;
      auto segs = level_components(death);
      // Level-death crossings inside the segment holding this child's minima
      // split it; pick the piece containing the child's minima.
      double lo = -kInf, hi = kInf;
      for (const auto& s : segs) {
        if (c.ti.minima.front() >= s.first - 1e-11 && c.ti.minima.back() <= s.second + 1e-11) {
          lo = s.first;
          hi = s.second;
          break;
        }
      }
      // Interior crossings (barrier points at exactly the death level).
      std::vector<double> cuts{lo};
      for (size_t pi = 0; pi < pieces_.size(); ++pi) {
        double a = std::max(pieces_[pi].z_left, lo);
        double b = (pi + 1 < pieces_.size()) ? std::min(pieces_[pi + 1].z_left, hi) : hi;
        if (!(a < b)) continue;
        Poly sh = pieces_[pi].p;
        if (sh.c.empty()) sh.c.push_back(0.0);
        sh.c[0] -= death;
        for (double r : real_roots_in(sh, a, b)) cuts.push_back(r);
      }
      cuts.push_back(hi);
      std::sort(cuts.begin(), cuts.end());
      std::vector<double> ded;
      for (double r : cuts) {
        if (ded.empty() || r - ded.back() > 1e-10 * std::max(1.0, hi - lo)) ded.push_back(r);
      }
      for (size_t q = 0; q + 1 < ded.size(); ++q) {
        if (c.ti.minima.front() >= ded[q] - 1e-11 && c.ti.minima.back() <= ded[q + 1] + 1e-11) {
          c.ti.z1 = ded[q];
          c.ti.z4 = ded[q + 1];
          break;
        }
      }
    }
  }

  // Canonical order: (birth, z2); remap parent links.
  std::vector<int> order(nodes.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    const auto& ta = nodes[static_cast<size_t>(a)].ti;
    const auto& tb = nodes[static_cast<size_t>(b)].ti;
    if (ta.birth != tb.birth) return ta.birth < tb.birth;
    return ta.z2 < tb.z2;
  });
  std::vector<int> pos(nodes.size());
  for (size_t q = 0; q < order.size(); ++q) pos[static_cast<size_t>(order[q])] = static_cast<int>(q);

  topo_.clear();
  topo_.resize(nodes.size());
  for (size_t q = 0; q < order.size(); ++q) {
    TopologyInterval ti = nodes[static_cast<size_t>(order[q])].ti;
    ti.id = static_cast<int>(q);
    ti.parent = -1;
    topo_[q] = ti;
  }
  for (size_t a = 0; a < nodes.size(); ++a) {
    for (int ch : nodes[a].children) {
      topo_[static_cast<size_t>(pos[static_cast<size_t>(ch)])].parent =
          pos[a];
    }
  }
}

int ProfileCurve::locate_interval(double z_min, double z_max, double tol) const {
  for (const auto& t : topo_) {
    bool left_ok = (t.z1 == -kInf || z_min >= t.z1 - tol) && z_min <= t.z2 - tol;
    bool right_ok = z_max >= t.z3 + tol && (t.z4 == kInf || z_max <= t.z4 + tol);
    if (left_ok && right_ok) return t.id;
  }
  return -1;
}

bool ProfileCurve::is_trivial(std::string* why) const {
  if (crit_.size() == 1 && crit_[0].kind == CriticalPoint::Kind::kMinimum) return true;
  if (why) {
    std::ostringstream os;
    os << "curve is not single-well; critical points:";
    for (const auto& cp : crit_) {
      os << " (" << fmt(cp.z) << ", " << fmt(cp.value) << ", "
         << (cp.kind == CriticalPoint::Kind::kMinimum ? "min" : "max") << ")";
    }
    *why = os.str();
  }
  return false;
}

bool ProfileCurve::trivial_flat_minimum() const {
  if (!is_trivial()) return false;
  return std::abs(rho_k(crit_[0].z, 2)) < 1e-10;
}

// ---------------------------------------------------------------------------

TrivialProfileData::TrivialProfileData(const ProfileCurve& prof) : prof_(&prof) {
  std::string why;
  if (!prof.is_trivial(&why)) throw ProfileError("single-well curve required", {why});
  z0_ = prof.critical_points()[0].z;
  depth_ = prof.critical_points()[0].value;
}

double TrivialProfileData::tau(double x) const {
  double d = prof_->rho(x) - depth_;
  if (d < 0.0) d = 0.0;
  double r = std::sqrt(d);
  return x < z0_ ? r : (x > z0_ ? -r : 0.0);
}

double TrivialProfileData::tau_inv(double v) const {
  if (v == 0.0) return z0_;
  double target = depth_ + v * v;
  if (v > 0.0) {
    double lo = z0_ - 1.0;
    while (prof_->rho(lo) < target) lo = z0_ - 2.0 * (z0_ - lo);
    return bisect([&](double z) { return prof_->rho(z) - target; }, lo, z0_, 1e-15);
  }
  double hi = z0_ + 1.0;
  while (prof_->rho(hi) < target) hi = z0_ + 2.0 * (hi - z0_);
  return bisect([&](double z) { return target - prof_->rho(z); }, z0_, hi, 1e-15);
}

double TrivialProfileData::omega(double x) const {
  if (x == 0.0) return z0_;
  if (x < 0.0) return omega(-x) + (-x);
  auto f = [&](double L) { return prof_->rho(L + x) - prof_->rho(L); };
  return bisect(f, z0_ - x, z0_, 1e-15);
}

double TrivialProfileData::omega_inv(double y) const {
  return tau_inv(-tau(y)) - y;
}

// ---------------------------------------------------------------------------

namespace {

struct BranchGeom {
  // Monotone outer slopes of a branch: left [z1, z2] descending, right
  // [z3, z4] ascending; for the root the brackets grow as needed.
  const ProfileCurve* prof;
  TopologyInterval t;

  double left_at(double y) const {
    double lo = t.z1, hi = t.z2;
    if (t.z1 == -kInf) {
      lo = hi - 1.0;
      while (prof->rho(lo) < y) lo = hi - 2.0 * (hi - lo);
    }
    return bisect([&](double z) { return prof->rho(z) - y; }, lo, hi, 1e-15);
  }
  double right_at(double y) const {
    double lo = t.z3, hi = t.z4;
    if (t.z4 == kInf) {
      hi = lo + 1.0;
      while (prof->rho(hi) < y) hi = lo + 2.0 * (hi - lo);
    }
    return bisect([&](double z) { return y - prof->rho(z); }, lo, hi, 1e-15);
  }
  double width_at(double y) const { return right_at(y) - left_at(y); }
  double birth_width() const { return t.z3 - t.z2; }
  double death_width() const {
    return (t.z4 == kInf || t.z1 == -kInf) ? kInf : t.z4 - t.z1;
  }
  // Level at which the branch width equals w (w in (birth_width, death_width]).
  double level_of_width(double w) const {
    double lo = t.birth, hi = t.death;
    if (hi == kInf) {
      hi = lo + 1.0;
      while (width_at(hi) < w) hi = lo + 2.0 * (hi - lo);
    }
    return bisect([&](double y) { return width_at(y) - w; }, lo, hi, 1e-15);
  }
};

}  // namespace

std::vector<RepInterval> enumerate_rep_intervals(const ProfileCurve& prof, double eps,
                                                 double y_max) {
  if (!(eps > 0.0)) throw ProfileError("lattice spacing must be positive");
  std::vector<RepInterval> out;
  const auto& topo = prof.topology_intervals();
  for (const auto& t : topo) {
    BranchGeom g{&prof, t};
    double wb = g.birth_width();
    double wd = g.death_width();
    bool unbounded = t.unbounded();

    int n_lo = static_cast<int>(std::floor(wb / eps + 1e-9)) + 1;
    if (n_lo < 1) n_lo = 1;

    double cap_w;
    if (y_max >= t.death) {
      cap_w = wd;
    } else if (y_max <= t.birth) {
      cap_w = wb;  // nothing fits under the ceiling
    } else {
      cap_w = g.width_at(y_max);
    }
    int n_hi = (cap_w == kInf) ? std::numeric_limits<int>::max()
                               : static_cast<int>(std::floor(cap_w / eps + 1e-9));

    std::vector<int> ns;
    for (int n = n_lo; n <= n_hi; ++n) ns.push_back(n);
    bool first_above = false;
    if (unbounded && ns.empty()) {
      // Keep the smallest unbounded-chain interval even above the ceiling.
      ns.push_back(n_lo);
      first_above = true;
    }
    for (int n : ns) {
      double w = n * eps;
      if (w > wd * (1.0 + 1e-12) + 1e-12) break;
      RepInterval ri;
      ri.topo = t.id;
      ri.n = n;
      ri.level = g.level_of_width(w);
      ri.z_min = g.left_at(ri.level);
      ri.z_max = ri.z_min + w;
      ri.above_ceiling = first_above;
      out.push_back(ri);
    }
  }

  std::sort(out.begin(), out.end(), [](const RepInterval& a, const RepInterval& b) {
    if (a.level != b.level) return a.level < b.level;
    return a.z_min < b.z_min;
  });
  for (size_t i = 0; i < out.size(); ++i) out[i].id = static_cast<int>(i);

  // Parent: smallest strictly containing interval.
  for (auto& s : out) {
    int best = -1;
    double best_w = kInf;
    for (const auto& tn : out) {
      if (tn.id == s.id) continue;
      if (tn.z_min <= s.z_min + 1e-12 && tn.z_max >= s.z_max - 1e-12 &&
          tn.n > s.n) {
        double w = tn.z_max - tn.z_min;
        if (w < best_w - 1e-12 ||
            (std::abs(w - best_w) <= 1e-12 && best >= 0 && tn.level < out[static_cast<size_t>(best)].level)) {
          best_w = w;
          best = tn.id;
        }
      }
    }
    s.parent = best;
  }
  return out;
}

double epsilon0(const ProfileCurve& prof, const std::string& compromise) {
  const auto& topo = prof.topology_intervals();
  double m = kInf;
  for (const auto& t : topo) {
    BranchGeom g{&prof, t};
    double gap = g.death_width() - g.birth_width();
    m = std::min(m, gap);
  }
  if (compromise == "remove" && !topo.empty() && m != kInf) {
    m /= static_cast<double>(topo.size());
  }
  return m;
}

std::vector<SurfacePoint> surface_points(const ProfileCurve& prof, double R, int n_z,
                                         int n_phi) {
  double level = prof.rho(R);
  for (const auto& cp : prof.critical_points()) {
    if (std::abs(level - cp.value) <= 1e-9 * std::max(1.0, std::abs(level))) {
      throw ProfileError("singular radius parameter: rho(R) coincides with the critical value at z=" +
                         fmt(cp.z));
    }
  }
  auto comps = prof.level_components(level);
  std::vector<SurfacePoint> pts;
  int ci = 0;
  for (const auto& [lo, hi] : comps) {
    for (int iz = 0; iz < n_z; ++iz) {
      double u = (n_z == 1) ? 0.5 : static_cast<double>(iz) / (n_z - 1);
      double z = lo + u * (hi - lo);
      double rad2 = level - prof.rho(z);
      double rad = std::sqrt(std::max(0.0, rad2));
      for (int ip = 0; ip < n_phi; ++ip) {
        double phi = 2.0 * kPi * ip / n_phi;
        pts.push_back({rad * std::cos(phi), rad * std::sin(phi), z, ci});
      }
    }
    ++ci;
  }
  return pts;
}

}  // namespace ncsr
