#include "lconf/reduce.hpp"

#include <string>

#include <Eigen/Eigenvalues>

#include "lconf/dataio.hpp"

namespace lconf::reduce {

namespace {

std::filesystem::path with_ext(std::filesystem::path stem, const char* ext) {
  stem += ext;
  return stem;
}

}  // namespace

PcaModel pca_fit(const FeatureMatrix& features, std::size_t m) {
  const std::size_t n = features.n(), d = features.d();
  if (m < 1 || m > std::min(n, d)) {
    throw InputError("PCA target dimension " + std::to_string(m) + " outside [1, " +
                     std::to_string(std::min(n, d)) + "]");
  }
  const RowMatrix& x = features.data();
  PcaModel model;
  model.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - model.mean.transpose();
  const double denom = n > 1 ? static_cast<double>(n - 1) : 1.0;
  const auto mm = static_cast<Eigen::Index>(m);

  Matrix directions(static_cast<Eigen::Index>(d), mm);  // columns
  Vector variances(mm);
  if (n >= d) {
    const Matrix cov = (centered.transpose() * centered) / denom;
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cov);
    // Eigen returns ascending eigenvalues.
    for (Eigen::Index c = 0; c < mm; ++c) {
      const Eigen::Index src = cov.rows() - 1 - c;
      directions.col(c) = eig.eigenvectors().col(src);
      variances(c) = eig.eigenvalues()(src);
    }
  } else {
    // Gram trick: if G u = lambda u with G = X_c X_c^T, then X_c^T u / sqrt(lambda) is a unit eigenvector of the covariance.
    const Matrix gram = centered * centered.transpose();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(gram);
    for (Eigen::Index c = 0; c < mm; ++c) {
      const Eigen::Index src = gram.rows() - 1 - c;
      const double lambda = eig.eigenvalues()(src);
      Vector v = centered.transpose() * eig.eigenvectors().col(src);
      const double norm = v.norm();
      if (lambda > 0.0 && norm > 0.0) {
        directions.col(c) = v / norm;
      } else {
        // Zero-variance direction: any unit vector orthogonal to the ones already found.
        Vector e = Vector::Zero(static_cast<Eigen::Index>(d));
        for (Eigen::Index k = 0; k < e.size(); ++k) {
          e.setZero();
          e(k) = 1.0;
          for (Eigen::Index p = 0; p < c; ++p) e -= directions.col(p).dot(e) * directions.col(p);
          if (e.norm() > 1e-6) break;
        }
        directions.col(c) = e.normalized();
      }
      variances(c) = lambda / denom;
    }
  }

  for (Eigen::Index c = 0; c < mm; ++c) {
    Eigen::Index arg = 0;
    directions.col(c).cwiseAbs().maxCoeff(&arg);
    if (directions(arg, c) < 0.0) directions.col(c) *= -1.0;
  }
  model.components = directions.transpose();
  model.explained_variance = variances.cwiseMax(0.0);
  return model;
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& features) {
  if (static_cast<Eigen::Index>(features.d()) != model.mean.size()) {
    throw InputError("pca_transform: feature dimension " + std::to_string(features.d()) + " does not match model " +
                     std::to_string(model.mean.size()));
  }
  RowMatrix out = (features.data().rowwise() - model.mean.transpose()) * model.components.transpose();
  return FeatureMatrix(std::move(out));
}

RowMatrix pca_inverse_transform(const PcaModel& model, const RowMatrix& reduced) {
  if (reduced.cols() != model.components.rows()) throw InputError("pca_inverse_transform: dimension mismatch");
  RowMatrix out = reduced * model.components;
  out.rowwise() += model.mean.transpose();
  return out;
}

void save_pca(const PcaModel& model, const std::filesystem::path& stem) {
  dataio::write_matrix(with_ext(stem, ".lcf"), model.components);
  nlohmann::json side{{"mean", std::vector<double>(model.mean.begin(), model.mean.end())},
                      {"explained_variance",
                       std::vector<double>(model.explained_variance.begin(), model.explained_variance.end())}};
  dataio::write_json(with_ext(stem, ".json"), side);
}

PcaModel load_pca(const std::filesystem::path& stem) {
  PcaModel model;
  model.components = dataio::read_matrix(with_ext(stem, ".lcf"));
  const auto side = dataio::read_json(with_ext(stem, ".json"));
  const auto mean = side.at("mean").get<std::vector<double>>();
  const auto var = side.at("explained_variance").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(mean.size()) != model.components.cols() ||
      static_cast<Eigen::Index>(var.size()) != model.components.rows()) {
    throw FormatError("PCA sidecar does not match component matrix shape", 0);
  }
  model.mean = Eigen::Map<const Vector>(mean.data(), static_cast<Eigen::Index>(mean.size()));
  model.explained_variance = Eigen::Map<const Vector>(var.data(), static_cast<Eigen::Index>(var.size()));
  return model;
}

}  // namespace lconf::reduce
