#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "test_util.hpp"

namespace ppsr {
namespace {

using testing::random_volume;

// exp(-(i^2+j^2)/2) normalized, evaluated at 40 digits (mpmath).
constexpr double kGaussCenter = 0.2041799555716581018265217178067786244723;
constexpr double kGaussEdge = 0.1238414031529739709938317182981612441502;
constexpr double kGaussCorner = 0.07511360795411150354953785225014409973173;

template <class Op>
double adjoint_defect(const Op& op, std::uint64_t seed) {
  const ImageVolume x = random_volume(op.input_shape(), seed, -1.0, 1.0);
  const ImageVolume y = random_volume(op.output_shape(), seed + 1000, -1.0, 1.0);
  const ImageVolume ax = op.apply(x);
  return std::abs(dot(ax, y) - dot(x, op.apply_adjoint(y))) / (norm(ax) * norm(y));
}

TEST(Kernel, GaussianTapsMatchReference) {
  const BlurKernel k = BlurKernel::gaussian(1.0, 3);
  EXPECT_NEAR(k(1, 1), kGaussCenter, 1e-15);
  EXPECT_NEAR(k(0, 1), kGaussEdge, 1e-15);
  EXPECT_NEAR(k(2, 1), kGaussEdge, 1e-15);
  EXPECT_NEAR(k(0, 0), kGaussCorner, 1e-15);
  EXPECT_NEAR(k(2, 2), kGaussCorner, 1e-15);
}

TEST(Kernel, NormalizedAtConstruction) {
  for (const BlurKernel& k : {BlurKernel::gaussian(1.7), BlurKernel::box(5),
                              BlurKernel::custom(3, 1, {1.0, 2.0, 5.0})}) {
    EXPECT_NEAR(std::accumulate(k.taps().begin(), k.taps().end(), 0.0), 1.0, 1e-12);
  }
  const BlurKernel raw = BlurKernel::custom(1, 3, {1.0, 2.0, 5.0}, false);
  EXPECT_EQ(raw(0, 2), 5.0);
}

TEST(Kernel, IdentityIsSingleUnitTap) {
  const BlurKernel k = BlurKernel::identity();
  EXPECT_EQ(k.rows(), 1u);
  EXPECT_EQ(k(0, 0), 1.0);
}

TEST(Kernel, RejectsEvenSidesAndZeroSum) {
  EXPECT_THROW(BlurKernel::custom(2, 3, std::vector<double>(6, 1.0)), InvalidArgument);
  EXPECT_THROW(BlurKernel::custom(1, 3, {1.0, -2.0, 1.0}), InvalidArgument);
}

TEST(Kernel, LoadsPlainTextFile) {
  const auto path = std::filesystem::temp_directory_path() / "ppsr_kernel.txt";
  std::ofstream(path) << "1 3\n1 2 1\n";
  const BlurKernel k = BlurKernel::load(path);
  EXPECT_EQ(k.rows(), 1u);
  EXPECT_EQ(k.cols(), 3u);
  EXPECT_DOUBLE_EQ(k(0, 1), 0.5);
  std::ofstream(path) << "3 3\n1 2\n";
  EXPECT_THROW(BlurKernel::load(path), IoError);
}

TEST(Blur, IdentityKernelIsExact) {
  const ImageVolume v = random_volume({6, 7, 2}, 5);
  EXPECT_EQ(apply_blur(v, BlurKernel::identity()), v);
  EXPECT_EQ(apply_blur_adjoint(v, BlurKernel::identity()), v);
  // an identity written as a custom kernel takes the general path
  const BlurKernel delta = BlurKernel::custom(3, 3, {0, 0, 0, 0, 1, 0, 0, 0, 0});
  EXPECT_EQ(apply_blur(v, delta), v);
}

TEST(Blur, PreservesConstants) {
  const ImageVolume v(15, 17, 2, 42.25);
  for (const BlurKernel& k : {BlurKernel::gaussian(1.0, 3), BlurKernel::box(5), BlurKernel::gaussian(2.0)}) {
    const ImageVolume out = apply_blur(v, k);
    for (double x : out.samples()) EXPECT_NEAR(x, 42.25, 1e-12);
  }
}

TEST(Blur, SymmetricKernelAdjointEqualsForwardOnInterior) {
  ImageVolume v(12, 12);
  for (std::size_t c = 3; c < 9; ++c)
    for (std::size_t r = 3; r < 9; ++r) v(r, c) = static_cast<double>(r * 13 + c * 7 % 5);
  const BlurKernel k = BlurKernel::gaussian(1.0, 5);
  const ImageVolume a = apply_blur(v, k), b = apply_blur_adjoint(v, k);
  for (std::size_t c = 2; c < 10; ++c)
    for (std::size_t r = 2; r < 10; ++r) EXPECT_NEAR(a(r, c), b(r, c), 1e-12);
}

TEST(Blur, AsymmetricKernelShiftsContent) {
  // kernel with all weight one column right of centre: out(r, c) = v(r, c - 1)
  const BlurKernel k = BlurKernel::custom(1, 3, {0.0, 0.0, 1.0});
  ImageVolume v(1, 4);
  for (std::size_t c = 0; c < 4; ++c) v(0, c) = static_cast<double>(c + 1);
  const ImageVolume out = apply_blur(v, k);
  EXPECT_EQ(out(0, 1), 1.0);
  EXPECT_EQ(out(0, 3), 3.0);
  EXPECT_EQ(out(0, 0), 1.0);  // mirror: v(-1) = v(0)
}

TEST(Blur, KernelLargerThanFrameIsRejected) {
  EXPECT_THROW(apply_blur(ImageVolume(4, 4), BlurKernel::box(5)), InvalidArgument);
  EXPECT_THROW(apply_blur_adjoint(ImageVolume(4, 8), BlurKernel::box(5)), InvalidArgument);
}

TEST(Blur, AdjointIdentityOnRandom8x8Frames) {
  const BlurKernel asym = BlurKernel::custom(3, 5, {1, 2, 3, 0, 1, 4, 1, 0, 2, 2, 0, 1, 5, 1, 3});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LE(adjoint_defect(BlurOperator(BlurKernel::gaussian(1.0, 3), {8, 8, 2}), seed), 1e-10);
    EXPECT_LE(adjoint_defect(BlurOperator(asym, {8, 8, 1}), seed), 1e-10);
  }
}

TEST(Decimate, Definition) {
  const ImageVolume v = random_volume({4, 4, 1}, 9);
  EXPECT_EQ(decimate(v, 1), v);
  const ImageVolume d = decimate(v, 2);
  ASSERT_EQ(d.shape(), (Shape{2, 2, 1}));
  EXPECT_EQ(d(0, 0), v(0, 0));
  EXPECT_EQ(d(1, 0), v(2, 0));
  EXPECT_EQ(d(0, 1), v(0, 2));
  EXPECT_EQ(d(1, 1), v(2, 2));
  const ImageVolume c = decimate(ImageVolume(6, 6, 2, 3.5), 3);
  for (double x : c.samples()) EXPECT_EQ(x, 3.5);
  EXPECT_THROW(decimate(v, 3), DimensionError);
}

TEST(Decimate, AdjointZeroFills) {
  const ImageVolume one = ImageVolume::from_rows({{7}});
  EXPECT_EQ(decimate_adjoint(one, 2, 2, 2), ImageVolume::from_rows({{7, 0}, {0, 0}}));
  const ImageVolume v = random_volume({3, 3, 2}, 3);
  EXPECT_EQ(decimate_adjoint(v, 1, 3, 3), v);
  EXPECT_THROW(decimate_adjoint(v, 2, 8, 6), DimensionError);
}

TEST(Decimate, AdjointIdentityIsExact) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const DecimationOperator op(2, {8, 6, 2});
    const ImageVolume x = random_volume(op.input_shape(), seed);
    const ImageVolume y = random_volume(op.output_shape(), seed + 77);
    EXPECT_EQ(dot(op.apply(x), y), dot(x, op.apply_adjoint(y)));
  }
}

TEST(Forward, ComposesBlurAndDecimation) {
  DegradationModel m{BlurKernel::gaussian(1.0, 3), 2, 1.0};
  const ImageVolume v = random_volume({8, 8, 2}, 1);
  EXPECT_EQ(forward(v, m), decimate(apply_blur(v, m.kernel), 2));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    EXPECT_LE(adjoint_defect(ForwardOperator(m, {8, 8, 2}), seed), 1e-10);
  }
}

TEST(Forward, CommutesWithFramePermutation) {
  DegradationModel m{BlurKernel::gaussian(1.0, 3), 2, 1.0};
  const ImageVolume v = random_volume({8, 8, 3}, 2);
  ImageVolume p(v.shape());
  const std::size_t perm[] = {2, 0, 1};
  for (std::size_t t = 0; t < 3; ++t) p.set_frame(t, v.extract_frame(perm[t]));
  const ImageVolume fv = forward(v, m), fp = forward(p, m);
  for (std::size_t t = 0; t < 3; ++t) EXPECT_EQ(fp.extract_frame(t), fv.extract_frame(perm[t]));
}

TEST(Normal, IdentityComposition) {
  const ImageVolume v = random_volume({5, 5, 2}, 4);
  EXPECT_EQ(normal_apply(v, DegradationModel{BlurKernel::identity(), 1, 1.0}), v);
}

TEST(Normal, SymmetricPsdAndLinear) {
  DegradationModel m{BlurKernel::gaussian(1.0, 3), 2, std::sqrt(2.0)};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageVolume x = random_volume({8, 8, 2}, seed, -1, 1);
    const ImageVolume y = random_volume({8, 8, 2}, seed + 50, -1, 1);
    const ImageVolume lx = normal_apply(x, m), ly = normal_apply(y, m);
    EXPECT_LE(std::abs(dot(lx, y) - dot(x, ly)), 1e-10 * norm(lx) * norm(y));
    EXPECT_GE(dot(lx, x), -1e-12 * squared_norm(x));
    const ImageVolume combo = normal_apply(elementwise_axpy(0.7, x, -2.5 * y), m);
    const ImageVolume expect = elementwise_axpy(0.7, lx, -2.5 * ly);
    EXPECT_LE(norm(combo - expect), 1e-10 * norm(expect));
  }
}

TEST(Normal, RejectsZeroSigma) {
  EXPECT_THROW(normal_apply(ImageVolume(4, 4), DegradationModel{BlurKernel::identity(), 1, 0.0}), InvalidArgument);
}

TEST(Noise, ZeroSigmaAndDeterminism) {
  const ImageVolume v = random_volume({16, 16, 1}, 8);
  EXPECT_EQ(add_noise(v, 0.0, 1), v);
  EXPECT_EQ(add_noise(v, 3.0, 99), add_noise(v, 3.0, 99));
  EXPECT_NE(add_noise(v, 3.0, 99), add_noise(v, 3.0, 100));
  EXPECT_THROW(add_noise(v, -1.0, 1), InvalidArgument);
}

TEST(Noise, SampleStandardDeviation) {
  // chi-square (n-1 = 65535) two-sided 1e-9 bounds on the sample std are
  // [1.3908, 1.4377]; the acceptance window is [1.34, 1.49].
  const ImageVolume v(256, 256, 1, 100.0);
  const ImageVolume d = add_noise(v, std::sqrt(2.0), 2017) - v;
  const double n = static_cast<double>(d.size());
  double mean = 0.0;
  for (double x : d.samples()) mean += x;
  mean /= n;
  double ss = 0.0;
  for (double x : d.samples()) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / (n - 1.0));
  EXPECT_GE(sd, 1.34);
  EXPECT_LE(sd, 1.49);
  EXPECT_GE(sd, 1.3908);
  EXPECT_LE(sd, 1.4377);
}

}  // namespace
}  // namespace ppsr
