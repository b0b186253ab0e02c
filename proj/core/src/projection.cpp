#include "dvauth/projection.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"
#include "dvauth/rng.hpp"
#include "projection_detail.hpp"

namespace dvauth {
namespace {

constexpr std::string_view kProjMagic = "DVPJ";
constexpr std::uint32_t kProjVersion = 1;

DenseLayer uniform_layer(Rng& rng, int out, int in) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  DenseLayer layer{Eigen::MatrixXf(out, in), Eigen::VectorXf(out)};
  for (int r = 0; r < out; ++r) {
    for (int c = 0; c < in; ++c) layer.weight(r, c) = static_cast<float>(rng.uniform(-bound, bound));
  }
  for (int r = 0; r < out; ++r) layer.bias[r] = static_cast<float>(rng.uniform(-bound, bound));
  return layer;
}

DenseLayer zero_layer(int out, int in) {
  return {Eigen::MatrixXf::Zero(out, in), Eigen::VectorXf::Zero(out)};
}

std::array<int, 2> layer_shape(int layer, int d, int h) {
  switch (layer) {
    case 0:
    case 1:
      return {h, d};
    case 2:
    case 3:
      return {h, 2 * h};
    default:
      return {1, h};
  }
}

const DenseLayer& layer_of(const ProjectionModel& m, int layer) {
  switch (layer) {
    case 0:
      return m.p_e;
    case 1:
      return m.p_dv;
    case 2:
      return m.p_inter;
    case 3:
      return m.p_d1;
    default:
      return m.p_d2;
  }
}

DenseLayer& layer_of(ProjectionModel& m, int layer) {
  return const_cast<DenseLayer&>(layer_of(static_cast<const ProjectionModel&>(m), layer));
}

void check_side(const SideInputs& side, int d, const char* which) {
  if (side.emb.rows() < 1) throw ContractError(std::string(which) + " side has no tokens");
  if (side.emb.cols() != d || side.dv.cols() != d || side.dv.rows() != side.emb.rows()) {
    throw ContractError(std::string(which) + " side inputs do not match model dimension d=" +
                        std::to_string(d));
  }
}

}  // namespace

ProjectionModel ProjectionModel::initialize(int d, int h, std::uint64_t seed) {
  if (d < 1 || h < 1) throw ConfigError("projection dimensions must be positive");
  Rng rng(seed);
  ProjectionModel m;
  m.d = d;
  m.h = h;
  m.seed = seed;
  m.p_e = uniform_layer(rng, h, d);
  m.p_dv = uniform_layer(rng, h, d);
  m.p_inter = uniform_layer(rng, h, 2 * h);
  m.p_d1 = uniform_layer(rng, h, 2 * h);
  m.p_d2 = uniform_layer(rng, 1, h);
  return m;
}

ProjectionModel ProjectionModel::zeros(int d, int h) {
  ProjectionModel m;
  m.d = d;
  m.h = h;
  m.p_e = zero_layer(h, d);
  m.p_dv = zero_layer(h, d);
  m.p_inter = zero_layer(h, 2 * h);
  m.p_d1 = zero_layer(h, 2 * h);
  m.p_d2 = zero_layer(1, h);
  return m;
}

std::size_t ProjectionModel::parameter_count() const {
  std::size_t total = 0;
  for (int l = 0; l < ProjectionParams::kLayers; ++l) {
    const auto& layer = layer_of(*this, l);
    total += static_cast<std::size_t>(layer.weight.size() + layer.bias.size());
  }
  return total;
}

void ProjectionModel::save(const std::filesystem::path& path) const {
  io::ByteWriter w;
  w.magic(kProjMagic);
  w.u32(kProjVersion);
  w.u32(static_cast<std::uint32_t>(d));
  w.u32(static_cast<std::uint32_t>(h));
  for (int l = 0; l < ProjectionParams::kLayers; ++l) {
    w.matrix(layer_of(*this, l).weight);
    w.vector(layer_of(*this, l).bias);
  }
  w.write_file(path);
}

ProjectionModel ProjectionModel::load(const std::filesystem::path& path) {
  auto r = io::ByteReader::from_file(path);
  r.expect_magic(kProjMagic);
  if (const auto v = r.u32(); v != kProjVersion) {
    throw FormatError(path.string() + ": unsupported DVPJ version " + std::to_string(v));
  }
  ProjectionModel m;
  m.d = static_cast<int>(r.u32());
  m.h = static_cast<int>(r.u32());
  if (m.d < 1 || m.h < 1) throw FormatError(path.string() + ": bad dimensions");
  for (int l = 0; l < ProjectionParams::kLayers; ++l) {
    const auto [rows, cols] = layer_shape(l, m.d, m.h);
    auto& layer = layer_of(m, l);
    layer.weight = r.matrix(static_cast<std::size_t>(rows), static_cast<std::size_t>(cols));
    layer.bias = r.vector(static_cast<std::size_t>(rows));
  }
  r.expect_end();
  return m;
}

ProjectionParams::ProjectionParams(int d, int h) : d_(d), h_(h) {
  layout();
  flat_ = Eigen::VectorXd::Zero(flat_.size());
}

ProjectionParams::ProjectionParams(const ProjectionModel& model) : d_(model.d), h_(model.h) {
  layout();
  for (int l = 0; l < kLayers; ++l) {
    const auto& layer = layer_of(model, l);
    weight(l) = layer.weight.cast<double>();
    bias(l) = layer.bias.cast<double>();
  }
}

void ProjectionParams::layout() {
  Eigen::Index offset = 0;
  for (int l = 0; l < kLayers; ++l) {
    const auto [rows, cols] = layer_shape(l, d_, h_);
    weights_[l] = {offset, rows, cols};
    offset += static_cast<Eigen::Index>(rows) * cols;
    biases_[l] = {offset, rows, 1};
    offset += rows;
  }
  flat_.resize(offset);
}

ProjectionParams::MatMap ProjectionParams::weight(int layer) {
  const Slot& s = weights_[layer];
  return MatMap(flat_.data() + s.offset, s.rows, s.cols);
}

ProjectionParams::VecMap ProjectionParams::bias(int layer) {
  const Slot& s = biases_[layer];
  return VecMap(flat_.data() + s.offset, s.rows);
}

ProjectionParams::ConstMatMap ProjectionParams::weight(int layer) const {
  const Slot& s = weights_[layer];
  return ConstMatMap(flat_.data() + s.offset, s.rows, s.cols);
}

ProjectionParams::ConstVecMap ProjectionParams::bias(int layer) const {
  const Slot& s = biases_[layer];
  return ConstVecMap(flat_.data() + s.offset, s.rows);
}

ProjectionModel ProjectionParams::to_model(std::uint64_t seed) const {
  ProjectionModel m = ProjectionModel::zeros(d_, h_);
  m.seed = seed;
  for (int l = 0; l < kLayers; ++l) {
    layer_of(m, l).weight = weight(l).cast<float>();
    layer_of(m, l).bias = bias(l).cast<float>();
  }
  return m;
}

double sigmoid(double logit) {
  if (logit >= 0) return 1.0 / (1.0 + std::exp(-logit));
  const double e = std::exp(logit);
  return e / (1.0 + e);
}

double bce_with_logit(double logit, bool label) {
  // log(1 + exp(z)) - y z, written to avoid overflow.
  const double softplus = std::max(logit, 0.0) + std::log1p(std::exp(-std::abs(logit)));
  return softplus - (label ? logit : 0.0);
}

double forward(const ProjectionParams& params, const SideInputs& known, const SideInputs& unknown) {
  check_side(known, params.d(), "known");
  check_side(unknown, params.d(), "unknown");
  const auto k = detail::segment_forward(params, known);
  const auto u = detail::segment_forward(params, unknown);
  return detail::head_logit(params, k.doc, u.doc);
}

double forward(const ProjectionModel& model, const SideInputs& known, const SideInputs& unknown) {
  return forward(ProjectionParams(model), known, unknown);
}

double forward(const ProjectionModel& model, const Eigen::MatrixXd& k_emb, const Eigen::MatrixXd& k_dv,
               const Eigen::MatrixXd& u_emb, const Eigen::MatrixXd& u_dv) {
  return forward(model, SideInputs{k_emb, k_dv}, SideInputs{u_emb, u_dv});
}

double loss_and_gradient(const ProjectionParams& params, const SideInputs& known,
                         const SideInputs& unknown, bool label, ProjectionParams& grad) {
  check_side(known, params.d(), "known");
  check_side(unknown, params.d(), "unknown");
  const auto k = detail::segment_forward(params, known);
  const auto u = detail::segment_forward(params, unknown);
  Eigen::VectorXd joint;
  Eigen::VectorXd z;
  const double logit = detail::head_logit(params, k.doc, u.doc, &joint, &z);
  const double grad_logit = sigmoid(logit) - (label ? 1.0 : 0.0);
  const Eigen::VectorXd grad_joint = detail::head_backward(params, joint, z, grad_logit, grad);
  const int h = params.h();
  detail::segment_backward(params, known, k, grad_joint.head(h), grad);
  detail::segment_backward(params, unknown, u, grad_joint.tail(h), grad);
  return bce_with_logit(logit, label);
}

double gradient_check(const ProjectionModel& model, const SideInputs& known, const SideInputs& unknown,
                      bool label, double epsilon) {
  ProjectionParams params(model);
  ProjectionParams analytic(model.d, model.h);
  loss_and_gradient(params, known, unknown, label, analytic);

  double worst = 0.0;
  Eigen::VectorXd& flat = params.flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    const double saved = flat[i];
    flat[i] = saved + epsilon;
    const double up = bce_with_logit(forward(params, known, unknown), label);
    flat[i] = saved - epsilon;
    const double down = bce_with_logit(forward(params, known, unknown), label);
    flat[i] = saved;
    const double numeric = (up - down) / (2.0 * epsilon);
    const double a = analytic.flat()[i];
    const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(a - numeric) / denom);
  }
  return worst;
}

}  // namespace dvauth
