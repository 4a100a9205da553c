#include "birkhoff/transfer.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <random>
#include <stack>

#include "birkhoff/errors.hpp"

namespace birkhoff {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Clusters sorted values closer than tol; returns representatives.
std::vector<double> cluster(std::vector<double> v, double tol) {
  std::sort(v.begin(), v.end());
  std::vector<double> out;
  for (double x : v)
    if (out.empty() || x - out.back() > tol) out.push_back(x);
  return out;
}

std::size_t nearest_index(const std::vector<double>& sorted, double x) {
  auto it = std::lower_bound(sorted.begin(), sorted.end(), x);
  if (it == sorted.end()) return sorted.size() - 1;
  if (it == sorted.begin()) return 0;
  const std::size_t i = static_cast<std::size_t>(it - sorted.begin());
  return (x - sorted[i - 1] <= sorted[i] - x) ? i - 1 : i;
}

}  // namespace

// ---------------------------------------------------------------------------
// Exact and grid transfer
// ---------------------------------------------------------------------------

PiecewiseFunction apply_transfer(const PiecewiseMap& map, const PiecewiseFunction& gamma) {
  if (!map.affine()) return apply_transfer_grid(map, gamma, 4096);
  struct Part {
    double y0, y1;
    TermSum t;
  };
  std::vector<Part> parts;
  std::vector<double> ends{map.lower(), map.upper()};
  const auto& B = gamma.breaks();
  for (const Branch& br : map.branches()) {
    const double inv = 1.0 / br.slope;
    for (std::size_t i = gamma.piece_index(br.lo, Side::plus); i < gamma.piece_count() && B[i] < br.hi; ++i) {
      if (gamma.pieces()[i].empty()) continue;
      const double u = std::max(B[i], br.lo), v = std::min(B[i + 1], br.hi);
      if (!(u < v)) continue;
      double y0 = std::clamp(br.value(u), map.lower(), map.upper());
      double y1 = std::clamp(br.value(v), map.lower(), map.upper());
      if (y0 > y1) std::swap(y0, y1);
      parts.push_back({y0, y1, gamma.pieces()[i].compose_affine(inv, -br.offset * inv) * cplx(std::abs(inv))});
      ends.push_back(y0);
      ends.push_back(y1);
    }
  }
  std::vector<double> br = cluster(std::move(ends), kBreakMergeTol * map.length());
  br.front() = map.lower();
  br.back() = map.upper();
  std::vector<TermSum> pieces(br.size() - 1);
  for (Part& p : parts) {
    const std::size_t i0 = nearest_index(br, p.y0), i1 = nearest_index(br, p.y1);
    for (std::size_t k = i0; k < i1; ++k) pieces[k] += p.t;
  }
  return PiecewiseFunction(std::move(br), std::move(pieces)).simplified();
}

PiecewiseFunction apply_transfer_grid(const PiecewiseMap& map, const PiecewiseFunction& gamma, int grid_points) {
  const double a = map.lower(), b = map.upper();
  std::vector<double> nodes;
  for (int k = 0; k <= grid_points; ++k) nodes.push_back(a + (b - a) * k / grid_points);
  for (const Branch& br : map.branches()) {
    nodes.push_back(std::clamp(br.value(br.lo), a, b));
    nodes.push_back(std::clamp(br.value(br.hi), a, b));
  }
  nodes = cluster(std::move(nodes), 1e-12 * (b - a));
  nodes.front() = a;
  nodes.back() = b;
  auto value = [&](double y, Side side) {
    cplx acc = 0.0;
    for (const Branch& br : map.branches()) {
      const double lo = br.image_lo(), hi = br.image_hi();
      const bool inside = side == Side::plus ? (lo <= y && y < hi) : (lo < y && y <= hi);
      if (!inside) continue;
      const double x = br.inverse(y);
      Side s = side;
      if (br.orientation() < 0) s = side == Side::plus ? Side::minus : Side::plus;
      if (x <= gamma.lower()) s = Side::plus;
      if (x >= gamma.upper()) s = Side::minus;
      acc += gamma.eval(x, s) / std::abs(br.derivative(x));
    }
    return acc;
  };
  std::vector<TermSum> pieces;
  for (std::size_t k = 0; k + 1 < nodes.size(); ++k) {
    const double y0 = nodes[k], y1 = nodes[k + 1];
    const cplx v0 = value(y0, Side::plus), v1 = value(y1, Side::minus);
    const cplx s = (v1 - v0) / (y1 - y0);
    pieces.push_back(TermSum({Term{0, 0.0, v0 - s * y0}, Term{1, 0.0, s}}));
  }
  return PiecewiseFunction(std::move(nodes), std::move(pieces)).simplified();
}

// ---------------------------------------------------------------------------
// Ulam discretization
// ---------------------------------------------------------------------------

UlamDiscretization::UlamDiscretization(const PiecewiseMap& map, int bins)
    : a_(map.lower()), b_(map.upper()), n_(bins), theta_(map.expansion_floor()) {
  if (bins < static_cast<int>(map.branches().size()))
    throw PreconditionError("Ulam discretization needs at least one bin per branch");
  edges_.resize(n_ + 1);
  for (int k = 0; k <= n_; ++k) edges_[k] = a_ + (b_ - a_) * k / n_;
  edges_.back() = b_;
  const double w = width();
  auto bin_of = [&](double x) { return std::clamp(static_cast<int>(std::floor((x - a_) / w)), 0, n_ - 1); };

  std::vector<Eigen::Triplet<double>> trip;
  std::size_t inversions = 0;
  for (const Branch& br : map.branches()) {
    for (int i = bin_of(br.lo); i < n_ && edges_[i] < br.hi; ++i) {
      const double u = std::max(edges_[i], br.lo), v = std::min(edges_[i + 1], br.hi);
      if (!(u < v)) continue;
      double y0 = std::clamp(br.value(u), a_, b_), y1 = std::clamp(br.value(v), a_, b_);
      if (y0 > y1) std::swap(y0, y1);
      for (int j = bin_of(y0); j < n_ && edges_[j] < y1; ++j) {
        const double p = std::max(y0, edges_[j]), q = std::min(y1, edges_[j + 1]);
        if (!(p < q)) continue;
        double measure;
        if (br.affine()) {
          measure = (q - p) / std::abs(br.slope);
        } else {
          measure = std::abs(br.inverse(q) - br.inverse(p));
          inversions += 2;
        }
        trip.emplace_back(i, j, measure / w);
      }
    }
  }
  p_.resize(n_, n_);
  p_.setFromTriplets(trip.begin(), trip.end());
  p_.makeCompressed();
  for (int i = 0; i < n_; ++i) row_error_ = std::max(row_error_, std::abs(p_.row(i).sum() - 1.0));
  error_bound_ = static_cast<double>(inversions) * 1e-15 / w;
}

BinVector UlamDiscretization::apply_transfer(const BinVector& v) const {
  BinVector out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    if (v[i] == 0.0) continue;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p_, i); it; ++it) out[it.col()] += it.value() * v[i];
  }
  return out;
}

BinVector UlamDiscretization::apply_koopman(const BinVector& w) const {
  BinVector out(n_, 0.0);
  for (int i = 0; i < n_; ++i) {
    cplx acc = 0.0;
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(p_, i); it; ++it) acc += it.value() * w[it.col()];
    out[i] = acc;
  }
  return out;
}

BinVector UlamDiscretization::average(const PiecewiseFunction& f) const {
  BinVector v = f.bin_integrals(edges_);
  const double w = width();
  for (cplx& x : v) x /= w;
  return v;
}

PiecewiseFunction UlamDiscretization::to_function(const BinVector& v) const {
  return PiecewiseFunction::from_bins(edges_, v).simplified(1e-12);
}

cplx UlamDiscretization::pairing(const BinVector& u, const BinVector& v) const {
  cplx acc = 0.0;
  for (int i = 0; i < n_; ++i) acc += u[i] * v[i];
  return acc * width();
}

UlamDiscretization ulam_matrix(const PiecewiseMap& map, int bins) { return UlamDiscretization(map, bins); }

double bin_l1(const UlamDiscretization& u, const BinVector& v) {
  double s = 0.0;
  for (const cplx& x : v) s += std::abs(x);
  return s * u.width();
}

double bin_variation(const BinVector& v) {
  if (v.empty()) return 0.0;
  double s = std::abs(v.front()) + std::abs(v.back());
  for (std::size_t i = 1; i < v.size(); ++i) s += std::abs(v[i] - v[i - 1]);
  return s;
}

// ---------------------------------------------------------------------------
// Peripheral spectrum from the class structure of the chain
// ---------------------------------------------------------------------------

namespace {

using Graph = std::vector<std::vector<int>>;

Graph support_graph(const UlamDiscretization& u) {
  Graph g(u.bins());
  const auto& P = u.matrix();
  for (int i = 0; i < u.bins(); ++i)
    for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(P, i); it; ++it)
      if (it.value() > 1e-12) g[i].push_back(static_cast<int>(it.col()));
  return g;
}

// Iterative Tarjan; returns component id per node.
std::vector<int> strong_components(const Graph& g, int& count) {
  const int n = static_cast<int>(g.size());
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1);
  std::vector<bool> on(n, false);
  std::vector<int> st;
  int counter = 0;
  count = 0;
  for (int s = 0; s < n; ++s) {
    if (index[s] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> call{{s, 0}};
    index[s] = low[s] = counter++;
    st.push_back(s);
    on[s] = true;
    while (!call.empty()) {
      auto& [v, k] = call.back();
      if (k < g[v].size()) {
        const int w = g[v][k++];
        if (index[w] < 0) {
          index[w] = low[w] = counter++;
          st.push_back(w);
          on[w] = true;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[v] = std::min(low[v], index[w]);
        }
      } else {
        const int vv = v;
        if (low[vv] == index[vv]) {
          int w;
          do {
            w = st.back();
            st.pop_back();
            on[w] = false;
            comp[w] = count;
          } while (w != vv);
          ++count;
        }
        call.pop_back();
        if (!call.empty()) low[call.back().first] = std::min(low[call.back().first], low[vv]);
      }
    }
  }
  return comp;
}

struct Root {
  int k;
  int d;  // reduced: gcd(k, d) == 1
};

Root reduce(int k, int d) {
  const int g = std::gcd(k, d);
  return {k / g, d / g};
}

}  // namespace

PeripheralSpectrum peripheral_spectrum(const UlamDiscretization& ulam, double gap_tol, int dense_limit) {
  PeripheralSpectrum out;
  const Graph g = support_graph(ulam);
  int ncomp = 0;
  const std::vector<int> comp = strong_components(g, ncomp);
  std::vector<bool> closed(ncomp, true);
  for (int v = 0; v < ulam.bins(); ++v)
    for (int w : g[v])
      if (comp[w] != comp[v]) closed[comp[v]] = false;

  std::vector<std::vector<int>> members(ncomp);
  for (int v = 0; v < ulam.bins(); ++v) members[comp[v]].push_back(v);
  // Order classes by their leftmost bin for determinism.
  std::vector<int> order;
  for (int c = 0; c < ncomp; ++c)
    if (closed[c]) order.push_back(c);
  std::sort(order.begin(), order.end(), [&](int x, int y) { return members[x].front() < members[y].front(); });
  if (order.empty()) throw NumericalError("no eigenvalue near 1: the Ulam chain has no closed class");

  std::vector<Root> roots;
  std::vector<int> mult;
  for (int c : order) {
    ErgodicClass cls;
    cls.bins = members[c];
    std::vector<int> level(ulam.bins(), -1);
    std::vector<int> queue{cls.bins.front()};
    level[cls.bins.front()] = 0;
    for (std::size_t q = 0; q < queue.size(); ++q) {
      const int v = queue[q];
      for (int w : g[v])
        if (comp[w] == c && level[w] < 0) {
          level[w] = level[v] + 1;
          queue.push_back(w);
        }
    }
    int d = 0;
    for (int v : cls.bins)
      for (int w : g[v])
        if (comp[w] == c) d = std::gcd(d, std::abs(level[v] + 1 - level[w]));
    cls.period = std::max(d, 1);
    for (int v : cls.bins) cls.subclass.push_back(level[v] % cls.period);
    for (int k = 0; k < cls.period; ++k) {
      const Root r = reduce(k, cls.period);
      auto it = std::find_if(roots.begin(), roots.end(), [&](const Root& x) { return x.k == r.k && x.d == r.d; });
      if (it == roots.end()) {
        roots.push_back(r);
        mult.push_back(1);
      } else {
        ++mult[static_cast<std::size_t>(it - roots.begin())];
      }
    }
    out.period = std::lcm(out.period, cls.period);
    out.classes.push_back(std::move(cls));
  }
  std::vector<std::size_t> idx(roots.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t x, std::size_t y) {
    return roots[x].k * roots[y].d < roots[y].k * roots[x].d;
  });
  for (std::size_t i : idx) {
    out.eigenvalues.push_back(std::polar(1.0, kTwoPi * roots[i].k / roots[i].d));
    out.orders.push_back(roots[i].d);
    out.multiplicity.push_back(mult[i]);
  }

  // Leading eigenvalue by lazy power iteration on P^T.
  {
    BinVector v(ulam.bins(), 1.0);
    for (int it = 0; it < 20000; ++it) {
      BinVector Lv = ulam.apply_transfer(v);
      double diff = 0.0;
      for (int i = 0; i < ulam.bins(); ++i) {
        const cplx nv = 0.5 * (v[i] + Lv[i]);
        diff = std::max(diff, std::abs(nv - v[i]));
        v[i] = nv;
      }
      if (diff < 1e-15) break;
    }
    const BinVector Lv = ulam.apply_transfer(v);
    cplx num = 0.0;
    double den = 0.0;
    for (int i = 0; i < ulam.bins(); ++i) {
      num += std::conj(v[i]) * Lv[i];
      den += std::norm(v[i]);
    }
    out.leading_eigenvalue = std::abs(num / den);
  }

  if (ulam.bins() <= dense_limit) {
    out.dense_checked = true;
    const Eigen::MatrixXd dense = Eigen::MatrixXd(ulam.matrix());
    Eigen::EigenSolver<Eigen::MatrixXd> es(dense, false);
    std::vector<Root> snapped;
    for (int i = 0; i < dense.rows(); ++i) {
      const cplx lam = es.eigenvalues()[i];
      if (std::abs(lam) <= 1.0 - gap_tol) continue;
      bool ok = false;
      const double arg = std::arg(lam) < 0 ? std::arg(lam) + kTwoPi : std::arg(lam);
      for (int d = 1; d <= ulam.bins() && !ok; ++d) {
        const int k = static_cast<int>(std::lround(arg * d / kTwoPi)) % d;
        if (std::abs(lam - std::polar(1.0, kTwoPi * k / d)) < 1e-6) {
          snapped.push_back(reduce(k, d));
          ok = true;
        }
      }
      if (!ok) out.near_peripheral.push_back(lam);
    }
    std::vector<Root> expected;
    for (std::size_t i = 0; i < roots.size(); ++i)
      for (int m = 0; m < mult[i]; ++m) expected.push_back(roots[i]);
    auto key = [](const Root& r) { return std::make_pair(r.d, r.k); };
    auto less = [&](const Root& x, const Root& y) { return key(x) < key(y); };
    std::sort(snapped.begin(), snapped.end(), less);
    std::sort(expected.begin(), expected.end(), less);
    out.dense_agrees = snapped.size() == expected.size() &&
                       std::equal(snapped.begin(), snapped.end(), expected.begin(),
                                  [&](const Root& x, const Root& y) { return key(x) == key(y); });
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral decomposition
// ---------------------------------------------------------------------------

SpectralDecomposition::SpectralDecomposition(std::shared_ptr<const UlamDiscretization> ulam,
                                             PeripheralSpectrum spectrum, int n_avg, double support_floor)
    : ulam_(std::move(ulam)), spectrum_(std::move(spectrum)), n_avg_(n_avg) {
  if (n_avg_ < 1) throw PreconditionError("n_avg must be positive");
  build_components(support_floor);
  build_duals();
  estimate_tail();
  measure_residuals();
}

template <class Step>
BinVector SpectralDecomposition::windowed_average(cplx lambda, BinVector v, Step step) const {
  const int p = spectrum_.period;
  const int window = n_avg_ * p;
  const double arg = std::arg(lambda);
  std::vector<cplx> phase(p);
  for (int j = 0; j < p; ++j) phase[j] = std::polar(1.0, -arg * j);
  BinVector prev;
  long long i = 0;
  for (int w = 0; w < 1000; ++w) {
    BinVector acc(v.size(), 0.0);
    for (int s = 0; s < window; ++s, ++i) {
      const cplx ph = phase[static_cast<std::size_t>(i % p)];
      for (std::size_t k = 0; k < v.size(); ++k) acc[k] += ph * v[k];
      v = step(v);
    }
    for (cplx& x : acc) x /= static_cast<double>(window);
    if (!prev.empty()) {
      double diff = 0.0, scale = 0.0;
      for (std::size_t k = 0; k < acc.size(); ++k) {
        diff = std::max(diff, std::abs(acc[k] - prev[k]));
        scale = std::max(scale, std::abs(acc[k]));
      }
      if (diff <= 1e-13 * std::max(scale, 1e-300)) return acc;
    }
    prev = std::move(acc);
  }
  throw NumericalError("Cesaro projector average did not settle; increase n_avg or the bin count");
}

void SpectralDecomposition::build_components(double support_floor) {
  const UlamDiscretization& u = *ulam_;
  const int n = u.bins();
  std::vector<int> owner(n, -1);
  for (const ErgodicClass& cls : spectrum_.classes) {
    BinVector v(n, 0.0);
    for (int b : cls.bins) v[b] = 1.0 / (static_cast<double>(cls.bins.size()) * u.width());
    BinVector rho = windowed_average(1.0, v, [&](const BinVector& x) { return u.apply_transfer(x); });
    double mass = 0.0, mx = 0.0;
    for (cplx& x : rho) {
      x = x.real();
      mass += x.real() * u.width();
      mx = std::max(mx, x.real());
    }
    for (cplx& x : rho) x /= mass;
    mx /= mass;
    std::vector<Interval> supp;
    for (int i = 0; i < n; ++i) {
      if (rho[i].real() <= support_floor * mx) continue;
      if (owner[i] >= 0)
        throw NumericalError("ambiguous ergodic splitting: invariant densities overlap on bin " + std::to_string(i));
      owner[i] = static_cast<int>(rho_.size());
      const double lo = u.edges()[i], hi = u.edges()[i + 1];
      if (!supp.empty() && supp.back().hi == lo) supp.back().hi = hi;
      else supp.push_back({lo, hi});
    }
    rho_.push_back(std::move(rho));
    supports_.push_back(std::move(supp));
  }
}

bool SpectralDecomposition::carries(int lambda_index, int l) const {
  const int d = spectrum_.classes[l].period;
  return d % spectrum_.orders[lambda_index] == 0;
}

void SpectralDecomposition::build_duals() {
  const UlamDiscretization& u = *ulam_;
  const int n = u.bins();
  const int E = components();
  const int nl = static_cast<int>(spectrum_.eigenvalues.size());
  dual_.assign(nl, std::vector<BinVector>(E, BinVector(n, 0.0)));
  eig_.assign(nl, std::vector<BinVector>(E, BinVector(n, 0.0)));
  masses_.assign(E, 0.0);
  for (int li = 0; li < nl; ++li) {
    const cplx lam = spectrum_.eigenvalues[li];
    for (int l = 0; l < E; ++l) {
      if (!carries(li, l)) continue;
      const ErgodicClass& cls = spectrum_.classes[l];
      BinVector v0(n, 0.0);
      for (std::size_t k = 0; k < cls.bins.size(); ++k)
        if (cls.subclass[k] == 0) v0[cls.bins[k]] = static_cast<double>(cls.period);
      dual_[li][l] = windowed_average(lam, v0, [&](const BinVector& x) { return u.apply_koopman(x); });
      BinVector& e = eig_[li][l];
      for (std::size_t k = 0; k < cls.bins.size(); ++k)
        e[cls.bins[k]] = std::pow(lam, -cls.subclass[k]) * rho_[l][cls.bins[k]];
      // Normalize so that <w, u> = 1 exactly.
      const cplx norm = u.pairing(dual_[li][l], e);
      for (cplx& x : dual_[li][l]) x /= norm;
    }
  }
  const int one = lambda_index(1.0);
  for (int l = 0; l < E; ++l) {
    double m = 0.0;
    for (const cplx& x : dual_[one][l]) m += x.real();
    masses_[l] = m * u.width();
  }
}

int SpectralDecomposition::lambda_index(cplx lambda) const {
  for (std::size_t i = 0; i < spectrum_.eigenvalues.size(); ++i)
    if (std::abs(spectrum_.eigenvalues[i] - lambda) < 1e-9) return static_cast<int>(i);
  return -1;
}

PiecewiseFunction SpectralDecomposition::density_function(int l) const { return ulam_->to_function(rho_[l]); }

BinVector SpectralDecomposition::eigenfunction(int lambda_index, int l) const {
  BinVector s(ulam_->bins(), 0.0);
  if (!carries(lambda_index, l)) return s;
  const cplx lam = spectrum_.eigenvalues[lambda_index];
  const ErgodicClass& cls = spectrum_.classes[l];
  for (std::size_t k = 0; k < cls.bins.size(); ++k)
    if (rho_[l][cls.bins[k]].real() > 0) s[cls.bins[k]] = std::pow(lam, -cls.subclass[k]);
  return s;
}

BinVector SpectralDecomposition::project(int lambda_index, const BinVector& v) const {
  BinVector out(ulam_->bins(), 0.0);
  for (int l = 0; l < components(); ++l) {
    if (!carries(lambda_index, l)) continue;
    const cplx c = ulam_->pairing(dual_[lambda_index][l], v);
    const BinVector& e = eig_[lambda_index][l];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += c * e[k];
  }
  return out;
}

BinVector SpectralDecomposition::project(int lambda_index, const PiecewiseFunction& g) const {
  return project(lambda_index, ulam_->average(g));
}

cplx SpectralDecomposition::coefficient(int lambda_index, int l, const PiecewiseFunction& g) const {
  if (!carries(lambda_index, l)) return 0.0;
  return ulam_->pairing(dual_[lambda_index][l], ulam_->average(g));
}

BinVector SpectralDecomposition::cesaro_project(int lambda_index, const BinVector& v) const {
  return windowed_average(spectrum_.eigenvalues[lambda_index], v,
                          [&](const BinVector& x) { return ulam_->apply_transfer(x); });
}

BinVector SpectralDecomposition::apply_tail(const BinVector& v) const {
  BinVector out = ulam_->apply_transfer(v);
  for (std::size_t li = 0; li < spectrum_.eigenvalues.size(); ++li) {
    const BinVector pv = project(static_cast<int>(li), v);
    const cplx lam = spectrum_.eigenvalues[li];
    for (std::size_t k = 0; k < out.size(); ++k) out[k] -= lam * pv[k];
  }
  return out;
}

void SpectralDecomposition::estimate_tail() {
  const UlamDiscretization& u = *ulam_;
  std::mt19937_64 rng(20240611ULL);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  constexpr int kSamples = 6;
  constexpr int kMaxSteps = 400;
  tail_norms_.assign(1, 0.0);
  std::vector<BinVector> cur;
  std::vector<double> base;
  for (int s = 0; s < kSamples; ++s) {
    BinVector v(u.bins());
    for (cplx& x : v) x = dist(rng);
    base.push_back(bin_bv(u, v));
    BinVector k = v;
    for (std::size_t li = 0; li < spectrum_.eigenvalues.size(); ++li) {
      const BinVector pv = project(static_cast<int>(li), v);
      for (std::size_t i = 0; i < k.size(); ++i) k[i] -= pv[i];
    }
    tail_norms_[0] = std::max(tail_norms_[0], bin_bv(u, k) / base.back());
    cur.push_back(std::move(k));
  }
  for (int n = 1; n <= kMaxSteps; ++n) {
    double m = 0.0;
    for (int s = 0; s < kSamples; ++s) {
      cur[s] = u.apply_transfer(cur[s]);
      m = std::max(m, bin_bv(u, cur[s]) / base[s]);
    }
    tail_norms_.push_back(m);
    if (m < 1e-13) break;
  }
  // Log-linear fit over the informative range.
  std::vector<double> xs, ys;
  for (std::size_t n = 1; n < tail_norms_.size(); ++n)
    if (tail_norms_[n] > 1e-12) {
      xs.push_back(static_cast<double>(n));
      ys.push_back(std::log(tail_norms_[n]));
    }
  double fit = 0.0;
  if (xs.size() >= 2) {
    const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / xs.size();
    const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / ys.size();
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
      sxy += (xs[i] - mx) * (ys[i] - my);
      sxx += (xs[i] - mx) * (xs[i] - mx);
    }
    fit = std::exp(sxy / sxx);
  }
  tail_rate_ = std::max(fit, 1.0 / u.expansion_floor());
  tail_constant_ = 1.0;
  for (std::size_t n = 0; n < tail_norms_.size(); ++n)
    tail_constant_ = std::max(tail_constant_, tail_norms_[n] / std::pow(tail_rate_, static_cast<double>(n)));
}

void SpectralDecomposition::measure_residuals() {
  const UlamDiscretization& u = *ulam_;
  std::mt19937_64 rng(7ULL);
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  BinVector v(u.bins());
  for (cplx& x : v) x = cplx(dist(rng), dist(rng) - 0.5);
  const double nv = bin_l1(u, v);
  const int nl = static_cast<int>(spectrum_.eigenvalues.size());
  std::vector<BinVector> pv;
  for (int li = 0; li < nl; ++li) pv.push_back(project(li, v));
  auto diff_norm = [&](const BinVector& x, const BinVector& y) {
    BinVector d(x.size());
    for (std::size_t k = 0; k < x.size(); ++k) d[k] = x[k] - y[k];
    return bin_l1(u, d);
  };
  const BinVector zero(u.bins(), 0.0);
  for (int li = 0; li < nl; ++li) {
    residuals_.idempotence = std::max(residuals_.idempotence, diff_norm(project(li, pv[li]), pv[li]) / nv);
    for (int mi = 0; mi < nl; ++mi)
      if (mi != li) residuals_.orthogonality = std::max(residuals_.orthogonality, bin_l1(u, project(li, pv[mi])) / nv);
    residuals_.tail_commutation = std::max(residuals_.tail_commutation, bin_l1(u, apply_tail(pv[li])) / nv);
    residuals_.tail_commutation = std::max(residuals_.tail_commutation, bin_l1(u, project(li, apply_tail(v))) / nv);
    residuals_.cesaro_agreement = std::max(residuals_.cesaro_agreement, diff_norm(cesaro_project(li, v), pv[li]) / nv);
  }
}

// ---------------------------------------------------------------------------
// Lasota-Yorke
// ---------------------------------------------------------------------------

std::vector<PiecewiseFunction> lasota_yorke_samples(const PiecewiseMap& map, int count, unsigned long long seed) {
  std::mt19937_64 rng(seed);
  const double a = map.lower(), b = map.upper();
  std::uniform_real_distribution<double> pos(a, b), height(-1.0, 1.0);
  std::vector<PiecewiseFunction> out;
  out.push_back(PiecewiseFunction::constant(a, b, 1.0));
  for (int k = 0; k < count; ++k) {
    double u = pos(rng), v = pos(rng);
    if (u > v) std::swap(u, v);
    if (k % 2 == 0) {
      out.push_back(PiecewiseFunction::indicator(a, b, u, v));
    } else {
      PiecewiseFunction f = PiecewiseFunction::indicator(a, b, u, v) * height(rng);
      double s = pos(rng), t = pos(rng);
      if (s > t) std::swap(s, t);
      f = f + PiecewiseFunction::indicator(a, b, s, t) * height(rng);
      out.push_back(f.simplified());
    }
  }
  return out;
}

LasotaYorkeFit lasota_yorke_check(const PiecewiseMap& map, const std::vector<PiecewiseFunction>& samples, int n_max) {
  LasotaYorkeFit fit;
  std::vector<double> v0, l0;
  std::vector<PiecewiseFunction> cur = samples;
  for (const PiecewiseFunction& g : samples) {
    v0.push_back(g.variation());
    l0.push_back(g.l1_norm());
  }
  const double vbar = std::accumulate(v0.begin(), v0.end(), 0.0) / v0.size();
  const double lbar = std::accumulate(l0.begin(), l0.end(), 0.0) / l0.size();
  for (int n = 1; n <= n_max; ++n) {
    std::vector<double> vn;
    for (PiecewiseFunction& g : cur) {
      g = apply_transfer(map, g);
      vn.push_back(g.variation());
    }
    // Two-variable LP: minimize c*vbar + b*lbar subject to vn <= c v0 + b l0.
    auto feasible = [&](double c, double b) {
      if (c < 0 || b < 0) return false;
      for (std::size_t s = 0; s < vn.size(); ++s)
        if (vn[s] > c * v0[s] + b * l0[s] + 1e-12 * (1.0 + vn[s])) return false;
      return true;
    };
    double best_c = 0, best_b = 0, best = INFINITY;
    auto consider = [&](double c, double b) {
      if (feasible(c, b) && c * vbar + b * lbar < best) {
        best = c * vbar + b * lbar;
        best_c = c;
        best_b = b;
      }
    };
    double cmax = 0, bmax = 0;
    for (std::size_t s = 0; s < vn.size(); ++s) {
      if (v0[s] > 0) cmax = std::max(cmax, vn[s] / v0[s]);
      if (l0[s] > 0) bmax = std::max(bmax, vn[s] / l0[s]);
    }
    consider(cmax, 0.0);
    consider(0.0, bmax);
    for (std::size_t s = 0; s < vn.size(); ++s) {
      if (l0[s] > 0) consider(0.0, vn[s] / l0[s]);
      if (v0[s] > 0) consider(vn[s] / v0[s], 0.0);
      for (std::size_t t = s + 1; t < vn.size(); ++t) {
        const double det = v0[s] * l0[t] - v0[t] * l0[s];
        if (std::abs(det) < 1e-14) continue;
        consider((vn[s] * l0[t] - vn[t] * l0[s]) / det, (v0[s] * vn[t] - v0[t] * vn[s]) / det);
      }
    }
    if (!std::isfinite(best)) {
      best_c = cmax;
      best_b = bmax;
    }
    fit.c.push_back(best_c);
    fit.b.push_back(best_b);
    if (best_c < 1.0) {
      if (fit.contracting_iterate == 0) fit.contracting_iterate = n;
      fit.rate = std::min(fit.rate, std::pow(std::max(best_c, 1e-300), 1.0 / n));
    }
  }
  return fit;
}

}  // namespace birkhoff
