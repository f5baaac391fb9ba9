#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <algorithm>

#include "hairsynth/metrics/report.hpp"

namespace {

using namespace hairsynth;

RasterImage random_image(int w, int h, std::uint64_t seed, float lo = 0.f, float hi = 1.f) {
  Rng rng(seed);
  RasterImage img(w, h, 3);
  for (float& v : img.data()) v = static_cast<float>(rng.uniform(lo, hi));
  return img;
}

// Naive per-window SSIM straight from the definition.
double ssim_oracle(const RasterImage& a, const RasterImage& b) {
  const int n = 11;
  std::vector<double> g(n * n);
  double gs = 0;
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) gs += g[j * n + i] = std::exp(-((i - 5) * (i - 5) + (j - 5) * (j - 5)) / (2 * 1.5 * 1.5));
  for (double& v : g) v /= gs;
  auto luma = [](const RasterImage& im, int x, int y) {
    return 255.0 * (0.299 * im(x, y, 0) + 0.587 * im(x, y, 1) + 0.114 * im(x, y, 2));
  };
  const double c1 = 6.5025, c2 = 58.5225;
  double total = 0;
  int count = 0;
  for (int y0 = 0; y0 + n <= a.height(); ++y0)
    for (int x0 = 0; x0 + n <= a.width(); ++x0) {
      double ma = 0, mb = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          ma += g[j * n + i] * luma(a, x0 + i, y0 + j);
          mb += g[j * n + i] * luma(b, x0 + i, y0 + j);
        }
      double va = 0, vb = 0, cov = 0;
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
          const double da = luma(a, x0 + i, y0 + j) - ma, db = luma(b, x0 + i, y0 + j) - mb;
          va += g[j * n + i] * da * da;
          vb += g[j * n + i] * db * db;
          cov += g[j * n + i] * da * db;
        }
      total += (2 * ma * mb + c1) * (2 * cov + c2) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return total / count;
}

// Frechet distance through the general (non-symmetric) eigenvalues of Ca*Cb.
double fid_oracle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double eps) {
  auto cov = [&](const Eigen::MatrixXd& x) {
    Eigen::MatrixXd c = x.rowwise() - x.colwise().mean();
    Eigen::MatrixXd s = c.transpose() * c / double(x.rows() - 1);
    return Eigen::MatrixXd(s + eps * Eigen::MatrixXd::Identity(x.cols(), x.cols()));
  };
  const Eigen::MatrixXd ca = cov(a), cb = cov(b);
  Eigen::EigenSolver<Eigen::MatrixXd> es(ca * cb);
  double tr = 0;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) tr += std::sqrt(std::max(0.0, es.eigenvalues()[i].real()));
  const Eigen::VectorXd dm = (a.colwise().mean() - b.colwise().mean()).transpose();
  return dm.squaredNorm() + ca.trace() + cb.trace() - 2 * tr;
}

Eigen::MatrixXd random_features(int n, int d, std::uint64_t seed) {
  Rng rng(seed);
  Eigen::MatrixXd m(n, d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) m(i, j) = (1.0 + 0.3 * j) * rng.normal();
  return m;
}

TEST(Psnr, UniformSixteenLevelDifference) {
  RasterImage a(32, 32, 3, 0.25f), b(32, 32, 3);
  for (std::size_t i = 0; i < a.data().size(); ++i) b.data()[i] = a.data()[i] + 16.f / 255.f;
  EXPECT_NEAR(metrics::mse255(a, b), 256.0, 1e-3);
  EXPECT_NEAR(metrics::psnr(a, b), 24.0485, 1e-3);
}

TEST(Psnr, IdenticalImagesHitTheCap) {
  const auto a = random_image(16, 16, 3);
  EXPECT_EQ(metrics::psnr(a, a), 99.0);
}

TEST(Psnr, MatchesDirectFormulaOnRandomPairs) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = random_image(20, 13, 100 + s), b = random_image(20, 13, 200 + s);
    double sq = 0;
    for (int y = 0; y < 13; ++y)
      for (int x = 0; x < 20; ++x)
        for (int c = 0; c < 3; ++c) {
          const double d = 255.0 * a(x, y, c) - 255.0 * b(x, y, c);
          sq += d * d;
        }
    const double mse = sq / (20 * 13 * 3);
    EXPECT_NEAR(metrics::psnr(a, b), 10 * std::log10(255.0 * 255.0 / mse), 1e-9);
  }
}

TEST(Psnr, StrictlyDecreasingInMse) {
  double last = 1e9;
  for (double m : {0.5, 1.0, 10.0, 256.0, 1000.0}) {
    const double p = metrics::psnr_from_mse(m);
    EXPECT_LT(p, last);
    last = p;
  }
}

TEST(Ssim, IdentityIsOne) {
  const auto a = random_image(32, 32, 5);
  EXPECT_NEAR(metrics::ssim(a, a), 1.0, 1e-12);
}

TEST(Ssim, Symmetric) {
  const auto a = random_image(24, 30, 6), b = random_image(24, 30, 7);
  EXPECT_NEAR(metrics::ssim(a, b), metrics::ssim(b, a), 1e-12);
}

TEST(Ssim, MatchesNaiveWindowOracle) {
  for (std::uint64_t s = 0; s < 4; ++s) {
    const auto a = random_image(32, 32, 10 + s);
    RasterImage b = a;
    Rng rng(20 + s);
    for (float& v : b.data()) v = std::clamp(v + static_cast<float>(0.1 * rng.normal()), 0.f, 1.f);
    EXPECT_NEAR(metrics::ssim(a, b), ssim_oracle(a, b), 1e-6);
  }
}

TEST(Ssim, RejectsImagesSmallerThanTheWindow) {
  const auto a = random_image(10, 32, 1);
  EXPECT_THROW(metrics::ssim(a, a), error);
}

TEST(Metrics, ExtentMismatchThrows) {
  const auto a = random_image(16, 16, 1), b = random_image(16, 15, 2);
  EXPECT_THROW(metrics::l1(a, b), error);
  EXPECT_THROW(metrics::psnr(a, b), error);
}

TEST(Fid, IdenticalSetsAreZero) {
  const auto f = random_features(30, 8, 1);
  EXPECT_LT(metrics::fid_from_features(f, f), 1e-6);
}

TEST(Fid, ConstantShiftGivesSquaredNorm) {
  const auto f = random_features(40, 8, 2);
  Eigen::RowVectorXd delta = Eigen::RowVectorXd::Zero(8);
  delta(0) = 2.0;  // |delta|^2 = 4
  const Eigen::MatrixXd g = f.rowwise() + delta;
  EXPECT_NEAR(metrics::fid_from_features(f, g), 4.0, 1e-6);
}

TEST(Fid, MatchesGeneralEigenOracle) {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto a = random_features(25, 8, 30 + s), b = random_features(35, 8, 40 + s);
    EXPECT_NEAR(metrics::fid_from_features(a, b), fid_oracle(a, b, metrics::kFidEps), 1e-6);
    EXPECT_NEAR(metrics::fid_from_features(a, b), metrics::fid_from_features(b, a), 1e-8);
  }
}

TEST(Fid, DegenerateCovarianceStaysFinite) {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(5, 8), b = Eigen::MatrixXd::Ones(5, 8);
  const double v = metrics::fid_from_features(a, b);
  EXPECT_TRUE(std::isfinite(v));
  EXPECT_NEAR(v, 8.0, 1e-6);
  EXPECT_THROW(metrics::fid_from_features(a.topRows(1), b), error);
}

TEST(Evaluate, PerfectModelScores) {
  std::vector<RasterImage> imgs;
  for (std::uint64_t s = 0; s < 4; ++s) imgs.push_back(random_image(32, 32, 50 + s));
  const auto r = metrics::evaluate_images("oracle", imgs, imgs);
  EXPECT_EQ(r.l1, 0.0);
  EXPECT_EQ(r.mse, 0.0);
  EXPECT_EQ(r.perceptual, 0.0);
  EXPECT_NEAR(r.ssim, 1.0, 1e-12);
  EXPECT_EQ(r.psnr, 99.0);
  EXPECT_EQ(r.psnr_pooled, 99.0);
  EXPECT_LT(r.fid, 1e-6);
}

TEST(Evaluate, PermutationInvariant) {
  std::vector<RasterImage> out, gt;
  for (std::uint64_t s = 0; s < 5; ++s) {
    out.push_back(random_image(16, 16, 60 + s));
    gt.push_back(random_image(16, 16, 70 + s));
  }
  const auto r1 = metrics::evaluate_images("a", out, gt);
  std::reverse(out.begin(), out.end());
  std::reverse(gt.begin(), gt.end());
  const auto r2 = metrics::evaluate_images("a", out, gt);
  EXPECT_NEAR(r1.l1, r2.l1, 1e-12);
  EXPECT_NEAR(r1.mse, r2.mse, 1e-9);
  EXPECT_NEAR(r1.psnr, r2.psnr, 1e-9);
  EXPECT_NEAR(r1.ssim, r2.ssim, 1e-12);
  EXPECT_NEAR(r1.fid, r2.fid, 1e-6);
}

TEST(Evaluate, PooledAndPerImageDiffer) {
  // One perfect and one poor image: the per-image PSNR mean includes the cap.
  const auto a = random_image(16, 16, 80), b = random_image(16, 16, 81);
  const std::vector<RasterImage> out{a, a}, gt{a, b};
  const auto r = metrics::evaluate_images("x", out, gt);
  EXPECT_NEAR(r.mse, r.mse_pooled, 1e-9);
  EXPECT_GT(r.psnr, r.psnr_pooled);
}

TEST(Report, TableAndCsvHaveOneLinePerRow) {
  metrics::MetricReport rep;
  rep.seed = 9;
  for (const char* n : {"A", "B", "C"}) rep.rows.push_back({.variant = n, .l1 = 0.1});
  const std::string t = metrics::format_table(rep);
  EXPECT_NE(t.find("PSNR(pool)"), std::string::npos);
  EXPECT_NE(t.find("\nC "), std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "hairsynth_report_test.csv";
  metrics::write_csv(rep, path);
  std::ifstream is(path);
  int lines = 0;
  for (std::string s; std::getline(is, s);) ++lines;
  EXPECT_EQ(lines, 4);
  std::filesystem::remove(path);
}

}  // namespace
