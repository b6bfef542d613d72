#include "afba/atoms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace afba {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

const char* prox_kind_tag(ProxKind k) {
  switch (k) {
    case ProxKind::kZero: return "zero";
    case ProxKind::kL1: return "l1";
    case ProxKind::kSqL2: return "sq_l2";
    case ProxKind::kQuad: return "quad";
    case ProxKind::kBox: return "box";
    case ProxKind::kPoint: return "point";
    case ProxKind::kNonneg: return "nonneg";
    case ProxKind::kL2: return "l2";
  }
  throw std::invalid_argument("prox_kind_tag: bad kind");
}

ProxKind prox_kind_from_tag(const std::string& tag) {
  for (ProxKind k : {ProxKind::kZero, ProxKind::kL1, ProxKind::kSqL2,
                     ProxKind::kQuad, ProxKind::kBox, ProxKind::kPoint,
                     ProxKind::kNonneg, ProxKind::kL2}) {
    if (tag == prox_kind_tag(k)) return k;
  }
  throw std::invalid_argument("unknown prox atom kind: " + tag);
}

ProxAtom make_zero_atom(std::size_t dim) {
  ProxAtom a;
  a.kind = ProxKind::kZero;
  a.dim = dim;
  return a;
}

ProxAtom make_l1_atom(std::size_t dim, double w) {
  if (w < 0) throw std::invalid_argument("l1 atom: negative weight");
  ProxAtom a;
  a.kind = ProxKind::kL1;
  a.dim = dim;
  a.weight = w;
  return a;
}

ProxAtom make_sq_l2_atom(std::size_t dim, double w) {
  if (w < 0) throw std::invalid_argument("sq_l2 atom: negative weight");
  ProxAtom a;
  a.kind = ProxKind::kSqL2;
  a.dim = dim;
  a.weight = w;
  return a;
}

ProxAtom make_quad_atom(DenseMatrix q, Vec lin) {
  if (q.rows != q.cols || q.rows != lin.size())
    throw std::invalid_argument("quad atom: shape mismatch");
  ProxAtom a;
  a.kind = ProxKind::kQuad;
  a.dim = lin.size();
  a.quad_q = std::move(q);
  a.lin_q = std::move(lin);
  return a;
}

ProxAtom make_box_atom(Vec lo, Vec hi) {
  if (lo.size() != hi.size())
    throw std::invalid_argument("box atom: bound size mismatch");
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("box atom: empty box");
  ProxAtom a;
  a.kind = ProxKind::kBox;
  a.dim = lo.size();
  a.lo = std::move(lo);
  a.hi = std::move(hi);
  return a;
}

ProxAtom make_point_atom(Vec b) {
  ProxAtom a;
  a.kind = ProxKind::kPoint;
  a.dim = b.size();
  a.point = std::move(b);
  return a;
}

ProxAtom make_nonneg_atom(std::size_t dim) {
  ProxAtom a;
  a.kind = ProxKind::kNonneg;
  a.dim = dim;
  return a;
}

ProxAtom make_l2_atom(std::size_t dim, double w) {
  if (w < 0) throw std::invalid_argument("l2 atom: negative weight");
  ProxAtom a;
  a.kind = ProxKind::kL2;
  a.dim = dim;
  a.weight = w;
  return a;
}

Vec resolvent(const ProxAtom& g, double gamma, const Vec& v) {
  if (v.size() != g.dim) throw std::invalid_argument("resolvent: size mismatch");
  if (!(gamma > 0)) throw std::invalid_argument("resolvent: gamma must be > 0");
  switch (g.kind) {
    case ProxKind::kZero:
      return v;
    case ProxKind::kL1: {
      Vec r(v.size());
      const double t = gamma * g.weight;
      for (std::size_t i = 0; i < v.size(); ++i) {
        r[i] = std::copysign(std::max(std::abs(v[i]) - t, 0.0), v[i]);
      }
      return r;
    }
    case ProxKind::kSqL2:
      return vscale(1.0 / (1.0 + gamma * g.weight), v);
    case ProxKind::kQuad: {
      // (I + gamma Q) x = v - gamma q
      DenseMatrix m = g.quad_q;
      for (auto& e : m.data) e *= gamma;
      for (std::size_t i = 0; i < m.rows; ++i) m(i, i) += 1.0;
      SymMetric sys(dense_op(std::move(m)));
      Vec rhs = v;
      vaxpy(-gamma, g.lin_q, rhs);
      return sys.solve(rhs);
    }
    case ProxKind::kBox: {
      Vec r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i)
        r[i] = std::clamp(v[i], g.lo[i], g.hi[i]);
      return r;
    }
    case ProxKind::kPoint:
      return g.point;
    case ProxKind::kNonneg: {
      Vec r(v.size());
      for (std::size_t i = 0; i < v.size(); ++i) r[i] = std::max(v[i], 0.0);
      return r;
    }
    case ProxKind::kL2: {
      const double nv = vnorm(v);
      const double t = gamma * g.weight;
      if (nv <= t) return Vec(v.size(), 0.0);
      return vscale(1.0 - t / nv, v);
    }
  }
  throw std::invalid_argument("resolvent: bad kind");
}

double eval(const ProxAtom& g, const Vec& x, double feas_tol) {
  if (x.size() != g.dim) throw std::invalid_argument("eval: size mismatch");
  switch (g.kind) {
    case ProxKind::kZero:
      return 0.0;
    case ProxKind::kL1: {
      double s = 0.0;
      for (double xi : x) s += std::abs(xi);
      return g.weight * s;
    }
    case ProxKind::kSqL2:
      return 0.5 * g.weight * vnorm_sq(x);
    case ProxKind::kQuad: {
      Vec qx(x.size());
      kernels::gemv(g.quad_q.rows, g.quad_q.cols, g.quad_q.data.data(),
                    x.data(), qx.data());
      return 0.5 * vdot(x, qx) + vdot(g.lin_q, x);
    }
    case ProxKind::kBox:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (x[i] < g.lo[i] - feas_tol || x[i] > g.hi[i] + feas_tol) return kInf;
      return 0.0;
    case ProxKind::kPoint:
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i] - g.point[i]) > feas_tol) return kInf;
      return 0.0;
    case ProxKind::kNonneg:
      for (double xi : x)
        if (xi < -feas_tol) return kInf;
      return 0.0;
    case ProxKind::kL2:
      return g.weight * vnorm(x);
  }
  throw std::invalid_argument("eval: bad kind");
}

Vec moreau_conjugate_prox(const ProxAtom& g, double gamma, const Vec& v) {
  // Moreau decomposition: v = prox_{gamma g*}(v) + gamma prox_{g/gamma}(v/gamma)
  Vec inner = resolvent(g, 1.0 / gamma, vscale(1.0 / gamma, v));
  Vec out = v;
  vaxpy(-gamma, inner, out);
  return out;
}

bool supports_metric_resolvent(const ProxAtom& g) {
  switch (g.kind) {
    case ProxKind::kZero:
    case ProxKind::kPoint:
    case ProxKind::kQuad:
    case ProxKind::kSqL2:
      return true;
    default:
      return false;
  }
}

Vec resolvent_metric(const ProxAtom& g, const SymMetric& h, const Vec& v) {
  if (v.size() != g.dim || h.dim() != g.dim)
    throw std::invalid_argument("resolvent_metric: size mismatch");
  switch (g.kind) {
    case ProxKind::kZero:
      return v;
    case ProxKind::kPoint:
      return g.point;
    case ProxKind::kSqL2: {
      // (H + w I) x = H v
      DenseMatrix m = h.dense();
      for (std::size_t i = 0; i < m.rows; ++i) m(i, i) += g.weight;
      SymMetric sys(dense_op(std::move(m)));
      return sys.solve(h.apply(v));
    }
    case ProxKind::kQuad: {
      // (H + Q) x = H v - q
      DenseMatrix m = h.dense();
      for (std::size_t i = 0; i < m.data.size(); ++i)
        m.data[i] += g.quad_q.data[i];
      SymMetric sys(dense_op(std::move(m)));
      Vec rhs = h.apply(v);
      vaxpy(-1.0, g.lin_q, rhs);
      return sys.solve(rhs);
    }
    default:
      throw std::invalid_argument(
          "resolvent_metric: atom only supports scaled-identity metrics");
  }
}

const char* coco_kind_tag(CocoKind k) {
  switch (k) {
    case CocoKind::kZero: return "zero";
    case CocoKind::kAffine: return "affine";
    case CocoKind::kScale: return "scale";
  }
  throw std::invalid_argument("coco_kind_tag: bad kind");
}

CocoKind coco_kind_from_tag(const std::string& tag) {
  for (CocoKind k : {CocoKind::kZero, CocoKind::kAffine, CocoKind::kScale}) {
    if (tag == coco_kind_tag(k)) return k;
  }
  throw std::invalid_argument("unknown cocoercive map kind: " + tag);
}

CocoMap make_zero_coco(std::size_t dim) {
  CocoMap c;
  c.kind = CocoKind::kZero;
  c.dim = dim;
  return c;
}

CocoMap make_affine_coco(DenseMatrix a, Vec b) {
  if (a.rows != b.size())
    throw std::invalid_argument("affine coco: shape mismatch");
  CocoMap c;
  c.kind = CocoKind::kAffine;
  c.dim = a.cols;
  c.a = std::move(a);
  c.b = std::move(b);
  return c;
}

CocoMap make_scale_coco(std::size_t dim, double mu) {
  if (!(mu > 0)) throw std::invalid_argument("scale coco: mu must be > 0");
  CocoMap c;
  c.kind = CocoKind::kScale;
  c.dim = dim;
  c.mu = mu;
  return c;
}

Vec apply(const CocoMap& c, const Vec& x) {
  if (x.size() != c.dim) throw std::invalid_argument("coco apply: size mismatch");
  switch (c.kind) {
    case CocoKind::kZero:
      return Vec(x.size(), 0.0);
    case CocoKind::kAffine: {
      Vec ax(c.a.rows);
      kernels::gemv(c.a.rows, c.a.cols, c.a.data.data(), x.data(), ax.data());
      vaxpy(-1.0, c.b, ax);
      Vec g(c.a.cols);
      kernels::gemv_t(c.a.rows, c.a.cols, c.a.data.data(), ax.data(), g.data());
      return g;
    }
    case CocoKind::kScale:
      return vscale(1.0 / c.mu, x);
  }
  throw std::invalid_argument("coco apply: bad kind");
}

double coco_value(const CocoMap& c, const Vec& x) {
  if (x.size() != c.dim) throw std::invalid_argument("coco_value: size mismatch");
  switch (c.kind) {
    case CocoKind::kZero:
      return 0.0;
    case CocoKind::kAffine: {
      Vec ax(c.a.rows);
      kernels::gemv(c.a.rows, c.a.cols, c.a.data.data(), x.data(), ax.data());
      vaxpy(-1.0, c.b, ax);
      return 0.5 * vnorm_sq(ax);
    }
    case CocoKind::kScale:
      return 0.5 * vnorm_sq(x) / c.mu;
  }
  throw std::invalid_argument("coco_value: bad kind");
}

double coco_beta(const CocoMap& c) {
  switch (c.kind) {
    case CocoKind::kZero:
      return kInf;
    case CocoKind::kAffine: {
      const double nrm = op_norm(*dense_op(c.a)).value;
      if (nrm == 0.0) return kInf;
      return 1.0 / (nrm * nrm);
    }
    case CocoKind::kScale:
      return c.mu;
  }
  throw std::invalid_argument("coco_beta: bad kind");
}

double coco_in_P_metric(const CocoMap& c, double p_min_eig) {
  if (!(p_min_eig > 0))
    throw std::invalid_argument("coco_in_P_metric: P must be strongly positive");
  return coco_beta(c) * p_min_eig;
}

std::size_t BlockAtom::dim() const {
  std::size_t n = 0;
  for (const auto& b : blocks) n += b.dim;
  return n;
}

std::size_t BlockAtom::block_offset(std::size_t i) const {
  std::size_t off = 0;
  for (std::size_t k = 0; k < i; ++k) off += blocks[k].dim;
  return off;
}

Vec resolvent(const BlockAtom& g, double gamma, const Vec& v) {
  if (v.size() != g.dim())
    throw std::invalid_argument("block resolvent: size mismatch");
  Vec out;
  out.reserve(v.size());
  std::size_t off = 0;
  for (const auto& blk : g.blocks) {
    Vec slice(v.begin() + static_cast<std::ptrdiff_t>(off),
              v.begin() + static_cast<std::ptrdiff_t>(off + blk.dim));
    Vec r = resolvent(blk, gamma, slice);
    out.insert(out.end(), r.begin(), r.end());
    off += blk.dim;
  }
  return out;
}

double eval(const BlockAtom& g, const Vec& x, double feas_tol) {
  if (x.size() != g.dim()) throw std::invalid_argument("block eval: size mismatch");
  double total = 0.0;
  std::size_t off = 0;
  for (const auto& blk : g.blocks) {
    Vec slice(x.begin() + static_cast<std::ptrdiff_t>(off),
              x.begin() + static_cast<std::ptrdiff_t>(off + blk.dim));
    total += eval(blk, slice, feas_tol);
    off += blk.dim;
  }
  return total;
}

}  // namespace afba
