#pragma once

// Proximable functions ("prox atoms") and cocoercive gradient maps.
//
// Atoms are plain data: a kind tag plus the parameters that kind needs.
// That keeps them serializable (the CLI reads them from JSON) and makes the
// resolvent a single free function instead of a class hierarchy.

#include <cstddef>
#include <string>

#include "afba/linops.hpp"

namespace afba {

enum class ProxKind {
  kZero,    // g = 0
  kL1,      // g = w * ||x||_1
  kSqL2,    // g = (w/2) * ||x||^2
  kQuad,    // g = (1/2) x'Qx + q'x, Q symmetric PSD
  kBox,     // indicator of [lo, hi] componentwise
  kPoint,   // indicator of the singleton {b}
  kNonneg,  // indicator of the nonnegative orthant
  kL2,      // g = w * ||x||_2
};

const char* prox_kind_tag(ProxKind k);
// Throws std::invalid_argument for unknown tags.
ProxKind prox_kind_from_tag(const std::string& tag);

struct ProxAtom {
  ProxKind kind = ProxKind::kZero;
  std::size_t dim = 0;
  double weight = 1.0;  // w for l1/sq_l2/l2
  DenseMatrix quad_q;   // quad: Q
  Vec lin_q;            // quad: q
  Vec lo, hi;           // box bounds
  Vec point;            // point: b
};

ProxAtom make_zero_atom(std::size_t dim);
ProxAtom make_l1_atom(std::size_t dim, double w);
ProxAtom make_sq_l2_atom(std::size_t dim, double w);
ProxAtom make_quad_atom(DenseMatrix q, Vec lin);
ProxAtom make_box_atom(Vec lo, Vec hi);
ProxAtom make_point_atom(Vec b);
ProxAtom make_nonneg_atom(std::size_t dim);
ProxAtom make_l2_atom(std::size_t dim, double w);

// prox_{gamma g}(v) = argmin_x g(x) + 1/(2 gamma) ||x - v||^2
Vec resolvent(const ProxAtom& g, double gamma, const Vec& v);

// Function value; indicators return +inf outside their set (with a small
// feasibility slack so points produced by the prox itself always pass).
double eval(const ProxAtom& g, const Vec& x, double feas_tol = 1e-9);

// prox_{gamma g*}(v) = v - gamma * prox_{g / gamma}(v / gamma)
Vec moreau_conjugate_prox(const ProxAtom& g, double gamma, const Vec& v);

// Resolvent in the metric of a symmetric PD operator H:
//   argmin_x g(x) + 1/2 ||x - v||_H^2
// Available for atoms whose prox is metric-invariant (zero, point) or a
// linear solve (quad, sq_l2); others only admit scaled-identity metrics.
bool supports_metric_resolvent(const ProxAtom& g);
Vec resolvent_metric(const ProxAtom& g, const SymMetric& h, const Vec& v);

// Cocoercive maps used as the smooth part C.
enum class CocoKind {
  kZero,    // C = 0 (beta = +inf)
  kAffine,  // C(x) = A'(Ax - b), gradient of 1/2 ||Ax-b||^2, beta = ||A||^-2
  kScale,   // C(x) = x / mu, beta = mu
};

const char* coco_kind_tag(CocoKind k);
CocoKind coco_kind_from_tag(const std::string& tag);

struct CocoMap {
  CocoKind kind = CocoKind::kZero;
  std::size_t dim = 0;
  DenseMatrix a;  // affine
  Vec b;          // affine
  double mu = 1.0;  // scale
};

CocoMap make_zero_coco(std::size_t dim);
CocoMap make_affine_coco(DenseMatrix a, Vec b);
CocoMap make_scale_coco(std::size_t dim, double mu);

Vec apply(const CocoMap& c, const Vec& x);
// Value of the underlying smooth function (0 for the zero map,
// 1/2 ||Ax-b||^2 for affine, ||x||^2 / (2 mu) for scale).
double coco_value(const CocoMap& c, const Vec& x);
// Cocoercivity constant in the standard norm (+inf for the zero map).
double coco_beta(const CocoMap& c);
// Cocoercivity in the norm induced by P, given the smallest eigenvalue of
// P: if <u, Cx-Cy> >= beta ||Cx-Cy||^2 and P >= tau I, then C is
// (beta * tau)-cocoercive with respect to ||.||_P.
double coco_in_P_metric(const CocoMap& c, double p_min_eig);

// A product-space function: independent atoms on contiguous slices.
struct BlockAtom {
  std::vector<ProxAtom> blocks;

  std::size_t dim() const;
  std::size_t block_offset(std::size_t i) const;
};

Vec resolvent(const BlockAtom& g, double gamma, const Vec& v);
double eval(const BlockAtom& g, const Vec& x, double feas_tol = 1e-9);

}  // namespace afba
