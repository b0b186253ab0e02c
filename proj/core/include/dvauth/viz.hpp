#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string_view>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "dvauth/deviation.hpp"

namespace dvauth {

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

struct DocumentProjection {
  std::string doc_id;
  std::vector<Point2> points;  // one per DV
  std::optional<Point2> arrow;  // projected ADV; empty for a document without DVs
};

// Joint PCA of two documents' DVs onto their top two principal axes.
struct Projection2D {
  Eigen::Matrix<double, 2, Eigen::Dynamic> components;  // rows orthonormal
  std::array<double, 2> explained_variance{};            // eigenvalues, descending
  double total_variance = 0.0;                           // trace of the covariance
  bool degenerate = false;                               // covariance rank < 2
  std::vector<DocumentProjection> documents;
};

// Covariance is taken about the joint mean; points and arrows are the DVs and
// ADVs projected onto the components without re-centering, so the origin
// stays "no deviation". Each component's first nonzero loading is positive.
Projection2D pca_2d(const DvSequence& first, const DvSequence& second);

enum class FlowerFormat { svg, csv };

FlowerFormat parse_flower_format(std::string_view name);

std::string flower_svg(const Projection2D& proj);
// doc,index,x,y,kind with kind in {dv, adv}.
std::string flower_csv(const Projection2D& proj);

void render_flower(const Projection2D& proj, const std::filesystem::path& out, FlowerFormat format);

}  // namespace dvauth
