#include "dvauth/viz.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include <Eigen/Eigenvalues>
#include <spdlog/spdlog.h>

#include "dvauth/binary_io.hpp"
#include "dvauth/error.hpp"

namespace dvauth {
namespace {

constexpr double kLoadingEps = 1e-12;

Eigen::RowVectorXd fix_sign(Eigen::RowVectorXd v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    if (std::abs(v[i]) > kLoadingEps) return v[i] < 0 ? Eigen::RowVectorXd(-v) : v;
  }
  return v;
}

Point2 project(const Eigen::Matrix<double, 2, Eigen::Dynamic>& c, const Eigen::VectorXd& x) {
  const Eigen::Vector2d p = c * x;
  return {p[0], p[1]};
}

std::string fmt_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

Projection2D pca_2d(const DvSequence& first, const DvSequence& second) {
  const std::size_t total = first.size() + second.size();
  const int d = first.size() > 0 ? first.dim() : second.dim();
  if (total < 2) throw ContractError("pca_2d needs at least two DVs");
  if (d < 2) throw ContractError("pca_2d needs dimension >= 2");
  if ((first.size() > 0 && first.dim() != d) || (second.size() > 0 && second.dim() != d)) {
    throw ContractError("pca_2d: DV dimensions differ");
  }

  Eigen::MatrixXd all(static_cast<Eigen::Index>(total), d);
  if (first.size() > 0) all.topRows(first.vectors.rows()) = first.vectors;
  if (second.size() > 0) all.bottomRows(second.vectors.rows()) = second.vectors;
  const Eigen::RowVectorXd mean = all.colwise().mean();
  const Eigen::MatrixXd centered = all.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(total - 1);

  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw Error("pca_2d: eigendecomposition failed");
  // Eigenvalues ascend.
  const auto& values = solver.eigenvalues();
  const auto& vectors = solver.eigenvectors();

  Projection2D proj;
  proj.components.resize(2, d);
  for (int k = 0; k < 2; ++k) {
    proj.components.row(k) = fix_sign(vectors.col(d - 1 - k).transpose());
    proj.explained_variance[static_cast<std::size_t>(k)] = std::max(0.0, values[d - 1 - k]);
  }
  proj.total_variance = cov.trace();
  const double tol = 1e-12 * std::max(1.0, proj.total_variance);
  if (proj.explained_variance[1] <= tol) {
    proj.degenerate = true;
    spdlog::warn("pca_2d: covariance rank < 2, second component is an arbitrary null-space direction");
  }

  for (const DvSequence* seq : {&first, &second}) {
    if (seq == &second && second.size() == 0) {
      // An empty second document contributes no subplot.
      continue;
    }
    DocumentProjection doc;
    doc.doc_id = seq->source_doc_id;
    for (Eigen::Index i = 0; i < seq->vectors.rows(); ++i) {
      doc.points.push_back(project(proj.components, seq->vectors.row(i).transpose()));
    }
    if (seq->size() > 0) doc.arrow = project(proj.components, average_dv(*seq).vector);
    proj.documents.push_back(std::move(doc));
  }
  return proj;
}

FlowerFormat parse_flower_format(std::string_view name) {
  if (name == "svg") return FlowerFormat::svg;
  if (name == "csv") return FlowerFormat::csv;
  throw ConfigError("unknown output format '" + std::string(name) + "' (expected svg|csv)");
}

std::string flower_csv(const Projection2D& proj) {
  std::string out = "doc,index,x,y,kind\n";
  for (const auto& doc : proj.documents) {
    for (std::size_t i = 0; i < doc.points.size(); ++i) {
      out += doc.doc_id + "," + std::to_string(i) + "," + fmt_num(doc.points[i].x) + "," +
             fmt_num(doc.points[i].y) + ",dv\n";
    }
  }
  for (const auto& doc : proj.documents) {
    if (doc.arrow) {
      out += doc.doc_id + ",0," + fmt_num(doc.arrow->x) + "," + fmt_num(doc.arrow->y) + ",adv\n";
    }
  }
  return out;
}

std::string flower_svg(const Projection2D& proj) {
  constexpr double kPanel = 400.0;
  constexpr double kPad = 20.0;
  const std::size_t panels = std::max<std::size_t>(1, proj.documents.size());

  // Shared scale so directions and lengths compare across subplots.
  double extent = 1e-12;
  for (const auto& doc : proj.documents) {
    for (const auto& p : doc.points) extent = std::max({extent, std::abs(p.x), std::abs(p.y)});
  }
  const double scale = (kPanel / 2 - kPad) / extent;
  // ADVs are much shorter than single DVs; stretch them to be visible.
  double arrow_extent = 1e-12;
  for (const auto& doc : proj.documents) {
    if (doc.arrow) arrow_extent = std::max({arrow_extent, std::abs(doc.arrow->x), std::abs(doc.arrow->y)});
  }
  const double arrow_scale = (kPanel / 2 - kPad) * 0.9 / arrow_extent;

  std::string svg;
  svg += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" +
         fmt_num(kPanel * static_cast<double>(panels)) + "\" height=\"" + fmt_num(kPanel + 30) + "\">\n";
  svg += "<defs><marker id=\"head\" markerWidth=\"8\" markerHeight=\"8\" refX=\"6\" refY=\"4\" "
         "orient=\"auto\"><path d=\"M0,0 L8,4 L0,8 z\" fill=\"#c00\"/></marker></defs>\n";
  for (std::size_t k = 0; k < proj.documents.size(); ++k) {
    const auto& doc = proj.documents[k];
    const double cx = kPanel * (static_cast<double>(k) + 0.5);
    const double cy = kPanel / 2;
    svg += "<g class=\"subplot\" id=\"doc" + std::to_string(k) + "\">\n";
    svg += "<rect x=\"" + fmt_num(kPanel * static_cast<double>(k)) +
           "\" y=\"0\" width=\"" + fmt_num(kPanel) + "\" height=\"" + fmt_num(kPanel) +
           "\" fill=\"none\" stroke=\"#999\"/>\n";
    svg += "<text x=\"" + fmt_num(cx) + "\" y=\"" + fmt_num(kPanel + 20) +
           "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">" + doc.doc_id + "</text>\n";
    for (const auto& p : doc.points) {
      svg += "<line class=\"dv\" x1=\"" + fmt_num(cx) + "\" y1=\"" + fmt_num(cy) + "\" x2=\"" +
             fmt_num(cx + p.x * scale) + "\" y2=\"" + fmt_num(cy - p.y * scale) +
             "\" stroke=\"#36c\" stroke-opacity=\"0.35\" stroke-width=\"0.8\"/>\n";
    }
    if (doc.arrow) {
      svg += "<line class=\"adv\" x1=\"" + fmt_num(cx) + "\" y1=\"" + fmt_num(cy) + "\" x2=\"" +
             fmt_num(cx + doc.arrow->x * arrow_scale) + "\" y2=\"" + fmt_num(cy - doc.arrow->y * arrow_scale) +
             "\" stroke=\"#c00\" stroke-width=\"4\" marker-end=\"url(#head)\"/>\n";
    }
    svg += "</g>\n";
  }
  svg += "</svg>\n";
  return svg;
}

void render_flower(const Projection2D& proj, const std::filesystem::path& out, FlowerFormat format) {
  io::write_file_text(out, format == FlowerFormat::svg ? flower_svg(proj) : flower_csv(proj));
}

}  // namespace dvauth
