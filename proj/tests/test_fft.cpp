#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "fedin/numerics/fft.hpp"

using namespace fedin;

namespace {

MatrixXd random_matrix(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  MatrixXd m(rows, cols);
  for (Index i = 0; i < m.size(); ++i) m.data()[i] = n(rng);
  return m;
}

SpectrumXd random_column(Index n, std::mt19937_64& rng) {
  return SpectrumXd(random_matrix(n, 1, rng), random_matrix(n, 1, rng));
}

// Textbook double loop with twiddles from std::polar.
SpectrumXd oracle_dft(const SpectrumXd& x) {
  const Index n = x.rows();
  SpectrumXd out(n, 1);
  for (Index k = 0; k < n; ++k) {
    std::complex<double> acc = 0;
    for (Index t = 0; t < n; ++t) {
      const double theta = -2.0 * std::numbers::pi * static_cast<double>(k * t % n) / static_cast<double>(n);
      acc += std::complex<double>(x.real(t, 0), x.imag(t, 0)) * std::polar(1.0, theta);
    }
    out.real(k, 0) = acc.real();
    out.imag(k, 0) = acc.imag();
  }
  return out;
}

double max_abs_diff(const SpectrumXd& a, const SpectrumXd& b) {
  return std::max((a.real - b.real).cwiseAbs().maxCoeff(), (a.imag - b.imag).cwiseAbs().maxCoeff());
}

const Index kLengths[] = {1, 2, 7, 8, 15, 16, 50, 100, 128};

}  // namespace

TEST(Fft, MatchesDirectDftOracle) {
  std::mt19937_64 rng(1);
  for (Index n : {2, 4, 7, 8, 16, 100, 128}) {
    const SpectrumXd x = random_column(n, rng);
    EXPECT_LT(max_abs_diff(fft(x), oracle_dft(x)), 1e-10) << "L=" << n;
  }
}

TEST(Fft, InverseRoundTrip) {
  std::mt19937_64 rng(2);
  for (Index n : kLengths) {
    const SpectrumXd x = random_column(n, rng);
    EXPECT_LT(max_abs_diff(ifft(fft(x)), x), 1e-9) << "L=" << n;
  }
}

TEST(Fft, Linearity) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-3, 3);
  for (Index n : kLengths) {
    const SpectrumXd x = random_column(n, rng), y = random_column(n, rng);
    const double a = u(rng), b = u(rng);
    const SpectrumXd lhs = fft(SpectrumXd(a * x.real + b * y.real, a * x.imag + b * y.imag));
    const SpectrumXd fx = fft(x), fy = fft(y);
    const SpectrumXd rhs(a * fx.real + b * fy.real, a * fx.imag + b * fy.imag);
    EXPECT_LT(max_abs_diff(lhs, rhs), 1e-9) << "L=" << n;
  }
}

TEST(Fft, Parseval) {
  std::mt19937_64 rng(4);
  for (Index n : kLengths) {
    const SpectrumXd x = random_column(n, rng);
    const SpectrumXd f = fft(x);
    const double time = x.real.squaredNorm() + x.imag.squaredNorm();
    const double freq = f.real.squaredNorm() + f.imag.squaredNorm();
    EXPECT_NEAR(static_cast<double>(n) * time, freq, 1e-9 * freq) << "L=" << n;
  }
}

TEST(Fft, RealTransformEqualsLeadingBinsExactly) {
  std::mt19937_64 rng(5);
  for (Index n : {2, 7, 8, 15, 16, 50, 100, 128}) {
    const MatrixXd x = random_matrix(n, 3, rng);
    const SpectrumXd half = rfft(x);
    ASSERT_EQ(half.rows(), n / 2 + 1);
    for (Index d = 0; d < x.cols(); ++d) {
      const SpectrumXd full = fft(SpectrumXd(x.col(d), MatrixXd::Zero(n, 1)));
      for (Index k = 0; k < half.rows(); ++k) {
        EXPECT_EQ(half.real(k, d), full.real(k, 0)) << "L=" << n << " k=" << k;
        EXPECT_EQ(half.imag(k, d), full.imag(k, 0)) << "L=" << n << " k=" << k;
      }
    }
  }
}

TEST(Fft, RealRoundTrip) {
  std::mt19937_64 rng(6);
  for (Index n : {2, 7, 8, 15, 16, 50, 100, 128}) {
    const MatrixXd x = random_matrix(n, 4, rng);
    EXPECT_LT((irfft(rfft(x), n) - x).cwiseAbs().maxCoeff(), 1e-10) << "L=" << n;
  }
}

TEST(Fft, InverseProjectsEdgeImaginaryParts) {
  for (Index n : {8, 9}) {
    SpectrumXd s(n / 2 + 1, 1);
    s.imag(0, 0) = 5;
    if (n % 2 == 0) s.imag(n / 2, 0) = -2;
    EXPECT_LT(irfft(s, n).cwiseAbs().maxCoeff(), 1e-15) << "L=" << n;
  }
}

TEST(Fft, PureToneLandsInOneBin) {
  const Index n = 100;
  MatrixXd x(n, 1);
  for (Index t = 0; t < n; ++t) x(t, 0) = std::cos(2 * std::numbers::pi * 5 * static_cast<double>(t) / n);
  const SpectrumXd s = rfft(x);
  for (Index k = 0; k < s.rows(); ++k) {
    const double mag = std::hypot(s.real(k, 0), s.imag(k, 0));
    if (k == 5) {
      EXPECT_NEAR(mag, n / 2.0, 1e-9);
    } else {
      EXPECT_LT(mag, 1e-9) << "k=" << k;
    }
  }
}

// <rfft(x), G> == <x, rfft_backward(G)> and likewise for irfft, in the real
// inner product on (real, imag) pairs.
TEST(Fft, BackwardPassesAreAdjoints) {
  std::mt19937_64 rng(7);
  for (Index n : {8, 9, 16, 50}) {
    const Index bins = n / 2 + 1;
    const MatrixXd x = random_matrix(n, 3, rng);
    const SpectrumXd g(random_matrix(bins, 3, rng), random_matrix(bins, 3, rng));
    const SpectrumXd fx = rfft(x);
    const double lhs = (fx.real.cwiseProduct(g.real)).sum() + (fx.imag.cwiseProduct(g.imag)).sum();
    const double rhs = x.cwiseProduct(rfft_backward(g, n)).sum();
    EXPECT_NEAR(lhs, rhs, 1e-10 * std::max(1.0, std::abs(lhs))) << "L=" << n;

    const MatrixXd y = irfft(g, n);
    const MatrixXd h = random_matrix(n, 3, rng);
    const SpectrumXd gh = irfft_backward(h);
    const double lhs2 = y.cwiseProduct(h).sum();
    const double rhs2 = (g.real.cwiseProduct(gh.real)).sum() + (g.imag.cwiseProduct(gh.imag)).sum();
    EXPECT_NEAR(lhs2, rhs2, 1e-10 * std::max(1.0, std::abs(lhs2))) << "L=" << n;
  }
}

TEST(Fft, RejectsBadShapes) {
  EXPECT_THROW(rfft(MatrixXd::Zero(1, 2)), DimensionError);
  EXPECT_THROW(irfft(SpectrumXd(3, 1), 8), DimensionError);
  EXPECT_THROW(fft(SpectrumXd(4, 2)), DimensionError);
}
