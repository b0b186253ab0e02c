#pragma once

// Forward and backward passes shared by scoring, gradient checking and
// training.

#include <utility>

#include <Eigen/Core>

#include "dvauth/projection.hpp"

namespace dvauth::detail {

// Activations of one side (one segment) of a pair.
struct SegmentPass {
  Eigen::MatrixXd a, b, concat, t;
  Eigen::VectorXd doc;
};

inline SegmentPass segment_forward(const ProjectionParams& p, const SideInputs& in) {
  const int h = p.h();
  SegmentPass s;
  s.a = ((in.emb * p.weight(0).transpose()).rowwise() + p.bias(0).transpose()).array().tanh();
  s.b = ((in.dv * p.weight(1).transpose()).rowwise() + p.bias(1).transpose()).array().tanh();
  s.concat.resize(in.emb.rows(), 2 * h);
  s.concat.leftCols(h) = s.a;
  s.concat.rightCols(h) = s.b;
  s.t = ((s.concat * p.weight(2).transpose()).rowwise() + p.bias(2).transpose()).array().tanh();
  s.doc = s.t.colwise().mean().transpose();
  return s;
}

inline void segment_backward(const ProjectionParams& p, const SideInputs& in, const SegmentPass& s,
                      const Eigen::VectorXd& grad_doc, ProjectionParams& g) {
  const int h = p.h();
  const double inv_n = 1.0 / static_cast<double>(in.emb.rows());
  const Eigen::MatrixXd grad_t_pre =
      (1.0 - s.t.array().square()).rowwise() * (grad_doc.transpose().array() * inv_n);
  g.weight(2).noalias() += grad_t_pre.transpose() * s.concat;
  g.bias(2) += grad_t_pre.colwise().sum().transpose();
  const Eigen::MatrixXd grad_concat = grad_t_pre * p.weight(2);
  const Eigen::MatrixXd grad_a = grad_concat.leftCols(h).array() * (1.0 - s.a.array().square());
  const Eigen::MatrixXd grad_b = grad_concat.rightCols(h).array() * (1.0 - s.b.array().square());
  g.weight(0).noalias() += grad_a.transpose() * in.emb;
  g.bias(0) += grad_a.colwise().sum().transpose();
  g.weight(1).noalias() += grad_b.transpose() * in.dv;
  g.bias(1) += grad_b.colwise().sum().transpose();
}

inline double head_logit(const ProjectionParams& p, const Eigen::VectorXd& doc_k, const Eigen::VectorXd& doc_u,
                  Eigen::VectorXd* joint_out = nullptr, Eigen::VectorXd* z_out = nullptr) {
  Eigen::VectorXd joint(2 * p.h());
  joint << doc_k, doc_u;
  Eigen::VectorXd z = (p.weight(3) * joint + p.bias(3)).array().tanh();
  const double logit = (p.weight(4) * z)(0) + p.bias(4)(0);
  if (joint_out) *joint_out = std::move(joint);
  if (z_out) *z_out = std::move(z);
  return logit;
}

// Accumulates head gradients for dLoss/dlogit = grad_logit and returns
// dLoss/d[doc_known; doc_unknown].
inline Eigen::VectorXd head_backward(const ProjectionParams& p, const Eigen::VectorXd& joint,
                                     const Eigen::VectorXd& z, double grad_logit, ProjectionParams& g) {
  g.weight(4).row(0) += grad_logit * z.transpose();
  g.bias(4)(0) += grad_logit;
  const Eigen::VectorXd grad_z_pre =
      (p.weight(4).row(0).transpose() * grad_logit).array() * (1.0 - z.array().square());
  g.weight(3).noalias() += grad_z_pre * joint.transpose();
  g.bias(3) += grad_z_pre;
  return p.weight(3).transpose() * grad_z_pre;
}

}  // namespace dvauth::detail
