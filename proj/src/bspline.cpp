#include "speclab/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace speclab {

BSplineBasis::BSplineBasis(int order, std::vector<double> breakpoints)
    : order_(order), breakpoints_(std::move(breakpoints)) {
  if (order_ < 2) throw ValidationError("BSplineBasis: order must be >= 2");
  if (breakpoints_.size() < 2)
    throw ValidationError("BSplineBasis: need at least two breakpoints");
  for (std::size_t i = 0; i + 1 < breakpoints_.size(); ++i)
    if (!(breakpoints_[i] < breakpoints_[i + 1]))
      throw ValidationError("BSplineBasis: breakpoints must be strictly increasing");

  const std::size_t m = breakpoints_.size();
  knots_.reserve(m - 2 + 2 * std::size_t(order_));
  for (int i = 0; i < order_; ++i) knots_.push_back(breakpoints_.front());
  for (std::size_t j = 1; j + 1 < m; ++j) knots_.push_back(breakpoints_[j]);
  for (int i = 0; i < order_; ++i) knots_.push_back(breakpoints_.back());

  full_count_ = knots_.size() - std::size_t(order_);  // = m - 2 + order
  if (full_count_ < 3)
    throw ValidationError(
        "BSplineBasis: too few functions to impose zero boundary values");
  count_ = full_count_ - 2;
}

std::size_t BSplineBasis::find_span(double r) const {
  const int k = order_;
  // Valid spans are knot intervals [t_s, t_{s+1}) with s in [k-1, full_count-1].
  const std::size_t lo = std::size_t(k - 1);
  const std::size_t hi = full_count_ - 1;  // last interval index
  if (r >= knots_[hi + 1]) return hi;      // clamp right endpoint
  if (r <= knots_[lo]) return lo;
  const auto it = std::upper_bound(knots_.begin(), knots_.end(), r);
  return std::size_t(it - knots_.begin()) - 1;
}

void BSplineBasis::eval_nonzero(double r, int derivative_order,
                                std::size_t& first_full, double* out) const {
  if (!(r >= domain_min() && r <= domain_max())) {
    std::ostringstream os;
    os << "eval_nonzero: r = " << r << " outside the domain [" << domain_min()
       << ", " << domain_max() << "]";
    throw ValidationError(os.str());
  }
  if (derivative_order < 0 || derivative_order > 2)
    throw ValidationError("eval_nonzero: derivative order must be 0, 1, or 2");

  const int k = order_;
  const std::size_t span = find_span(r);
  first_full = span - std::size_t(k) + 1;

  // Triangle of values: rows[m-1][j] = B_{span-m+1+j, m}(r), j = 0 .. m-1.
  // Built by the de Boor (Cox) recursion; 0/0 terms are treated as 0.
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(k));
  rows[0] = {1.0};
  for (int m = 2; m <= k; ++m) {
    std::vector<double>& cur = rows[std::size_t(m - 1)];
    const std::vector<double>& prev = rows[std::size_t(m - 2)];
    cur.assign(std::size_t(m), 0.0);
    // Function indices: i = span - m + 1 + j.  The recursion is
    // B_{i,m} = (r - t_i)/(t_{i+m-1} - t_i) B_{i,m-1}
    //         + (t_{i+m} - r)/(t_{i+m} - t_{i+1}) B_{i+1,m-1}.
    for (int j = 0; j < m; ++j) {
      const long i = long(span) - m + 1 + j;
      double acc = 0.0;
      if (j > 0) {  // B_{i,m-1} is prev[j-1]
        const double den = knots_[std::size_t(i + m - 1)] - knots_[std::size_t(i)];
        if (den > 0.0) acc += (r - knots_[std::size_t(i)]) / den * prev[std::size_t(j - 1)];
      }
      if (j < m - 1) {  // B_{i+1,m-1} is prev[j]
        const double den = knots_[std::size_t(i + m)] - knots_[std::size_t(i + 1)];
        if (den > 0.0) acc += (knots_[std::size_t(i + m)] - r) / den * prev[std::size_t(j)];
      }
      cur[std::size_t(j)] = acc;
    }
  }

  // Derivative ladder: row of order-m derivatives from order-(m-1) rows via
  // d/dr B_{i,m} = (m-1) [ c_{i,m-1} / (t_{i+m-1} - t_i)
  //                      - c_{i+1,m-1} / (t_{i+m} - t_{i+1}) ],
  // where c is the previous-derivative-order row of order m-1.
  auto raise = [&](const std::vector<double>& low, int m) {
    // low[j] = order-(m-1) values for i = span - m + 2 + j, j = 0 .. m-2.
    std::vector<double> out_row(std::size_t(m), 0.0);
    for (int j = 0; j < m; ++j) {
      const long i = long(span) - m + 1 + j;
      double acc = 0.0;
      if (j > 0) {
        const double den = knots_[std::size_t(i + m - 1)] - knots_[std::size_t(i)];
        if (den > 0.0) acc += low[std::size_t(j - 1)] / den;
      }
      if (j < m - 1) {
        const double den = knots_[std::size_t(i + m)] - knots_[std::size_t(i + 1)];
        if (den > 0.0) acc -= low[std::size_t(j)] / den;
      }
      out_row[std::size_t(j)] = double(m - 1) * acc;
    }
    return out_row;
  };

  std::vector<double> result;
  if (derivative_order == 0) {
    result = rows[std::size_t(k - 1)];
  } else if (derivative_order == 1) {
    if (k >= 2)
      result = raise(rows[std::size_t(k - 2)], k);
    else
      result.assign(std::size_t(k), 0.0);
  } else {
    if (k >= 3) {
      std::vector<double> d1_low = raise(rows[std::size_t(k - 3)], k - 1);
      result = raise(d1_low, k);
    } else {
      result.assign(std::size_t(k), 0.0);
    }
  }
  for (int j = 0; j < k; ++j) out[j] = result[std::size_t(j)];
}

double BSplineBasis::eval(std::size_t retained, double r,
                          int derivative_order) const {
  if (retained >= count_) {
    std::ostringstream os;
    os << "eval: basis index " << retained << " out of range (count " << count_
       << ")";
    throw ValidationError(os.str());
  }
  const std::size_t target = full_index(retained);
  std::vector<double> block(static_cast<std::size_t>(order_));
  std::size_t first = 0;
  eval_nonzero(r, derivative_order, first, block.data());
  if (target < first || target >= first + std::size_t(order_)) return 0.0;
  return block[target - first];
}

BasisTable tabulate(const BSplineBasis& basis, const QuadratureRule& rule) {
  BasisTable t;
  t.count = basis.count();
  t.order = basis.order();
  const std::size_t k = std::size_t(basis.order());
  std::size_t n_nodes = 0;
  for (const auto& p : rule.panels) n_nodes += p.nodes.size();
  t.node_r.reserve(n_nodes);
  t.node_w.reserve(n_nodes);
  t.node_first.reserve(n_nodes);
  t.val.resize(n_nodes * k);
  t.d1.resize(n_nodes * k);
  t.d2.resize(n_nodes * k);
  std::size_t idx = 0;
  for (const auto& p : rule.panels) {
    for (std::size_t i = 0; i < p.nodes.size(); ++i, ++idx) {
      const double r = p.nodes[i];
      t.node_r.push_back(r);
      t.node_w.push_back(p.weights[i]);
      std::size_t first = 0;
      basis.eval_nonzero(r, 0, first, &t.val[idx * k]);
      std::size_t f1 = 0, f2 = 0;
      basis.eval_nonzero(r, 1, f1, &t.d1[idx * k]);
      basis.eval_nonzero(r, 2, f2, &t.d2[idx * k]);
      t.node_first.push_back(first);
    }
  }
  return t;
}

namespace {
const double* deriv_block(const BasisTable& t, int p, std::size_t node) {
  const std::size_t k = std::size_t(t.order);
  switch (p) {
    case 0: return &t.val[node * k];
    case 1: return &t.d1[node * k];
    case 2: return &t.d2[node * k];
    default: throw ValidationError("assemble: derivative order must be 0, 1, or 2");
  }
}
}  // namespace

std::vector<double> assemble_weighted(const BasisTable& t,
                                      const std::function<double(double)>& weight,
                                      int p, int q) {
  const std::size_t n = t.count;
  const std::size_t k = std::size_t(t.order);
  std::vector<double> a(n * n, 0.0);
  for (std::size_t node = 0; node < t.node_r.size(); ++node) {
    const double wval = weight ? weight(t.node_r[node]) : 1.0;
    if (!std::isfinite(wval)) {
      std::ostringstream os;
      os << "assemble_weighted: non-finite weight at node r = " << t.node_r[node];
      throw NumericalError(os.str());
    }
    const double scale = t.node_w[node] * wval;
    if (scale == 0.0) continue;
    const double* bp = deriv_block(t, p, node);
    const double* bq = deriv_block(t, q, node);
    const std::size_t first = t.node_first[node];
    for (std::size_t a_i = 0; a_i < k; ++a_i) {
      const std::size_t fi = first + a_i;
      if (fi < 1 || fi > n) continue;  // trimmed boundary functions
      const double left = bp[a_i] * scale;
      if (left == 0.0) continue;
      double* row = &a[(fi - 1) * n];
      for (std::size_t b_j = 0; b_j < k; ++b_j) {
        const std::size_t fj = first + b_j;
        if (fj < 1 || fj > n) continue;
        row[fj - 1] += left * bq[b_j];
      }
    }
  }
  return a;
}

std::vector<double> assemble_moments(const BasisTable& t,
                                     const std::function<double(double)>& f,
                                     int p) {
  const std::size_t n = t.count;
  const std::size_t k = std::size_t(t.order);
  std::vector<double> b(n, 0.0);
  for (std::size_t node = 0; node < t.node_r.size(); ++node) {
    const double fval = f(t.node_r[node]);
    if (!std::isfinite(fval)) {
      std::ostringstream os;
      os << "assemble_moments: non-finite integrand at node r = " << t.node_r[node];
      throw NumericalError(os.str());
    }
    const double scale = t.node_w[node] * fval;
    const double* bp = deriv_block(t, p, node);
    const std::size_t first = t.node_first[node];
    for (std::size_t a_i = 0; a_i < k; ++a_i) {
      const std::size_t fi = first + a_i;
      if (fi < 1 || fi > n) continue;
      b[fi - 1] += scale * bp[a_i];
    }
  }
  return b;
}

}  // namespace speclab
