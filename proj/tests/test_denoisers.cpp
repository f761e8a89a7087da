#include <gtest/gtest.h>

#include <cmath>
#include <iostream>
#include <vector>

#include "test_util.hpp"

namespace ppsr {
namespace {

using testing::random_volume;
using testing::structured_volume;

DenoiserSpec spec_of(DenoiserKind k) {
  DenoiserSpec s;
  s.kind = k;
  s.kappa = 0.5;  // wide enough that small test levels still mix neighbours
  s.search_radius = 3;
  s.temporal_radius = 1;
  return s;
}

const DenoiserKind kAllKinds[] = {DenoiserKind::gaussian_smooth, DenoiserKind::tv, DenoiserKind::nlm_image,
                                  DenoiserKind::nlm_video};

TEST(Denoise, ConstantVolumesAreFixedPoints) {
  const ImageVolume v(12, 10, 3, 117.3);
  for (DenoiserKind k : kAllKinds) {
    for (double sigma : {0.5, 5.0, 40.0}) {
      const ImageVolume out = denoise(v, sigma, spec_of(k));
      for (double x : out.samples()) ASSERT_NEAR(x, 117.3, 1e-12) << to_string(k) << " sigma " << sigma;
    }
  }
}

TEST(Denoise, Deterministic) {
  const ImageVolume v = random_volume({10, 10, 3}, 3);
  for (DenoiserKind k : kAllKinds) EXPECT_EQ(denoise(v, 12.0, spec_of(k)), denoise(v, 12.0, spec_of(k)));
}

TEST(Denoise, RejectsNonPositiveSigmaAndBadSpecs) {
  const ImageVolume v(8, 8);
  EXPECT_THROW(denoise(v, 0.0, spec_of(DenoiserKind::nlm_image)), InvalidArgument);
  EXPECT_THROW(denoise(v, -1.0, spec_of(DenoiserKind::gaussian_smooth)), InvalidArgument);
  DenoiserSpec bad = spec_of(DenoiserKind::nlm_image);
  bad.patch_radius = 0;
  EXPECT_THROW(denoise(v, 1.0, bad), InvalidArgument);
  bad = spec_of(DenoiserKind::tv);
  bad.tv_iterations = 0;
  EXPECT_THROW(denoise(v, 1.0, bad), InvalidArgument);
  bad = spec_of(DenoiserKind::gaussian_smooth);
  bad.kappa = 0.0;
  EXPECT_THROW(denoise(v, 1.0, bad), InvalidArgument);
}

TEST(Denoise, GaussianSmoothImprovesNoisyFixture) {
  const ImageVolume clean = smooth_scene(64);
  const ImageVolume noisy = add_noise(clean, 10.0, 64);
  DenoiserSpec spec;
  spec.kind = DenoiserKind::gaussian_smooth;
  const double before = mse(noisy, clean);
  const double after = mse(denoise(noisy, 10.0, spec), clean);
  EXPECT_NEAR(before, 100.0, 3.0);
  EXPECT_LT(after, before);
}

TEST(Denoise, NlmAndTvImproveNoisyFixture) {
  const ImageVolume clean = smooth_scene(48);
  const ImageVolume noisy = add_noise(clean, 10.0, 48);
  const double before = mse(noisy, clean);
  for (DenoiserKind k : {DenoiserKind::tv, DenoiserKind::nlm_image}) {
    EXPECT_LT(mse(denoise(noisy, 10.0, spec_of(k)), clean), 0.7 * before) << to_string(k);
  }
}

TEST(Denoise, GaussianSmoothNeverIncreasesTotalVariation) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const ImageVolume v = random_volume({16, 12, 2}, seed);
    for (double sigma : {0.3, 1.0, 4.0}) {
      EXPECT_LE(total_variation(denoise(v, sigma, spec_of(DenoiserKind::gaussian_smooth))),
                total_variation(v) * (1.0 + 1e-12));
    }
  }
}

TEST(Nlm, IdenticalFramesStayIdentical) {
  const ImageVolume f = random_volume({12, 14, 1}, 5);
  ImageVolume v(12, 14, 5);
  for (std::size_t t = 0; t < 5; ++t) v.set_frame(t, f);
  DenoiserSpec s = spec_of(DenoiserKind::nlm_video);
  for (int tr : {1, 2, 4}) {
    s.temporal_radius = tr;
    const ImageVolume out = denoise(v, 15.0, s);
    for (std::size_t t = 1; t < 5; ++t) EXPECT_EQ(out.extract_frame(t), out.extract_frame(0)) << tr;
  }
}

TEST(Nlm, ZeroTemporalRadiusEqualsPerFrameImageNlm) {
  const ImageVolume v = random_volume({10, 9, 4}, 6);
  DenoiserSpec video = spec_of(DenoiserKind::nlm_video);
  video.temporal_radius = 0;
  const ImageVolume out = denoise(v, 20.0, video);
  for (std::size_t t = 0; t < v.frames(); ++t) {
    EXPECT_EQ(out.extract_frame(t), denoise(v.extract_frame(t), 20.0, spec_of(DenoiserKind::nlm_image)));
  }
}

TEST(Nlm, SingleFrameVideoDegeneratesToImage) {
  const ImageVolume v = random_volume({10, 10, 1}, 7);
  EXPECT_EQ(denoise(v, 9.0, spec_of(DenoiserKind::nlm_video)), denoise(v, 9.0, spec_of(DenoiserKind::nlm_image)));
}

TEST(Nlm, UsesOtherFrames) {
  // A frame plus a translated copy: temporal search must change the result.
  const ImageVolume a = random_volume({12, 12, 1}, 8);
  ImageVolume v(12, 12, 2);
  v.set_frame(0, a);
  v.set_frame(1, a);
  for (std::size_t c = 0; c < 12; ++c)
    for (std::size_t r = 0; r < 12; ++r) v(r, c, 1) = a(r, (c + 1) % 12);
  DenoiserSpec img = spec_of(DenoiserKind::nlm_video);
  img.temporal_radius = 0;
  EXPECT_NE(denoise(v, 10.0, spec_of(DenoiserKind::nlm_video)), denoise(v, 10.0, img));
}

// ---------------------------------------------------------------------------

TEST(RedPrior, ZeroOnConstantsAndZero) {
  const DenoiserSpec s = spec_of(DenoiserKind::gaussian_smooth);
  EXPECT_NEAR(red_prior_value(ImageVolume(8, 8, 1, 50.0), 3.0, s), 0.0, 1e-9);
  EXPECT_EQ(red_prior_value(ImageVolume(8, 8, 1, 0.0), 3.0, s), 0.0);
  const ImageVolume g = red_gradient(ImageVolume(8, 8, 2, 50.0), 3.0, spec_of(DenoiserKind::nlm_video));
  for (double x : g.samples()) EXPECT_NEAR(x, 0.0, 1e-12);
}

TEST(RedPrior, MatchesIndependentInnerProduct) {
  const ImageVolume x = random_volume({8, 8, 1}, 31);
  const DenoiserSpec s = spec_of(DenoiserKind::gaussian_smooth);
  const ImageVolume fx = denoise(x, 2.0, s);
  long double acc = 0.0L;
  for (std::size_t c = 0; c < 8; ++c)
    for (std::size_t r = 0; r < 8; ++r) acc += static_cast<long double>(x(r, c)) * (x(r, c) - fx(r, c));
  const double expect = static_cast<double>(acc / 2.0L);
  EXPECT_NEAR(red_prior_value(x, 2.0, s), expect, 1e-10 * std::abs(expect));
}

TEST(RedPrior, GradientMatchesFiniteDifferencesForLinearDenoiser) {
  const DenoiserSpec s = spec_of(DenoiserKind::gaussian_smooth);
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const ImageVolume x = random_volume({10, 10, 2}, seed);
    const ImageVolume d = random_volume({10, 10, 2}, seed + 100, -1.0, 1.0);
    const double h = 1e-3;
    const double fd = (red_prior_value(elementwise_axpy(h, d, x), 2.5, s) -
                       red_prior_value(elementwise_axpy(-h, d, x), 2.5, s)) / (2.0 * h);
    const double analytic = dot(red_gradient(x, 2.5, s), d);
    EXPECT_NEAR(fd, analytic, 1e-3 * std::abs(analytic));
  }
}

TEST(RedPrior, QuadraticFormGradientOn4x4) {
  // f(x) = A x with A symmetric: grad of 1/2 x^T (I - A) x is (I - A) x.
  const DenoiserSpec s = spec_of(DenoiserKind::gaussian_smooth);
  const Shape shape{4, 4, 1};
  const Eigen::MatrixXd A = testing::materialize([&](const ImageVolume& v) { return denoise(v, 1.5, s); }, shape, shape);
  ASSERT_LE((A - A.transpose()).norm(), 1e-15);
  const ImageVolume x = random_volume(shape, 44);
  const Eigen::VectorXd expect = (Eigen::MatrixXd::Identity(16, 16) - A) * testing::to_eigen(x);
  EXPECT_LE((testing::to_eigen(red_gradient(x, 1.5, s)) - expect).norm(), 1e-12 * expect.norm());
}

// ---------------------------------------------------------------------------

std::vector<ImageVolume> probe_fixtures() {
  return {structured_volume(16, 16), testing::random_volume({12, 12, 1}, 9, 30, 220)};
}

TEST(RedProbe, GaussianSmoothSatisfiesConditions) {
  const auto fixtures = probe_fixtures();
  const RedConditionReport r = probe_red_conditions(spec_of(DenoiserKind::gaussian_smooth), 2.0, fixtures);
  EXPECT_LT(r.homogeneity_defect, 1e-10);
  EXPECT_LT(r.jacobian_asymmetry, 1e-8);
  EXPECT_GT(r.spectral_radius_estimate, 0.9);
  EXPECT_LE(r.spectral_radius_estimate, 1.0 + 1e-9);
}

TEST(RedProbe, IdentityLikeDenoiserHasUnitSpectralRadius) {
  DenoiserSpec s = spec_of(DenoiserKind::gaussian_smooth);
  s.kappa = 1e-4;  // taps off centre underflow to zero
  const auto fixtures = probe_fixtures();
  const RedConditionReport r = probe_red_conditions(s, 1.0, fixtures);
  EXPECT_NEAR(r.spectral_radius_estimate, 1.0, 1e-6);
}

TEST(RedProbe, NlmReportIsFinite) {
  const auto fixtures = probe_fixtures();
  const RedConditionReport r = probe_red_conditions(spec_of(DenoiserKind::nlm_image), 10.0, fixtures);
  for (double x : {r.homogeneity_defect, r.jacobian_asymmetry, r.spectral_radius_estimate}) {
    EXPECT_TRUE(std::isfinite(x));
    EXPECT_GE(x, 0.0);
  }
  std::cout << "[nlm_image sigma=10] homogeneity " << r.homogeneity_defect << ", asymmetry "
            << r.jacobian_asymmetry << ", spectral radius " << r.spectral_radius_estimate << "\n";
}

TEST(RedProbe, EmptyFixtureListIsRejected) {
  const std::vector<ImageVolume> none;
  EXPECT_THROW(probe_red_conditions(spec_of(DenoiserKind::gaussian_smooth), 1.0, none), InvalidArgument);
}

}  // namespace
}  // namespace ppsr
