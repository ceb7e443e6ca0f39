#include <cmath>

#include <doctest.h>

#include "lgm/error.hpp"
#include "lgm/marginals.hpp"
#include "lgm/random.hpp"
#include "support/oracles.hpp"

using lgm::MarginalModel;

namespace {

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

// mean of Gaussian CDFs, evaluated without any windowing
double direct_cdf(const std::vector<double>& c, double h, double x) {
  double s = 0.0;
  for (double v : c) s += normal_cdf((x - v) / h);
  return s / static_cast<double>(c.size());
}

std::vector<double> normal_column(std::size_t n, std::uint64_t seed) {
  return oracle::column(oracle::standard_normal(static_cast<Eigen::Index>(n), 1, seed), 0);
}

}  // namespace

TEST_CASE("silverman rule value") {
  CHECK(lgm::silverman_rule(1.0, 1.34, 100) == doctest::Approx(0.9 * std::pow(100.0, -0.2)).epsilon(1e-14));
  CHECK(lgm::silverman_rule(1.0, 1.34, 100) == doctest::Approx(0.3583).epsilon(1e-4));
  CHECK(lgm::silverman_rule(2.0, 1.34, 100) == doctest::Approx(0.9 * std::pow(100.0, -0.2)));
  CHECK(lgm::silverman_rule(2.0, 0.0, 100) == doctest::Approx(1.8 * std::pow(100.0, -0.2)));
}

TEST_CASE("silverman bandwidth of a column") {
  // sd and type-7 IQR computed by hand for {1, 2, 3, 4, 10}
  const std::vector<double> x{4, 1, 10, 3, 2};
  const double mean = 4.0;
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sd = std::sqrt(ss / 4.0);
  const double iqr = 4.0 - 2.0;
  CHECK(lgm::silverman_bandwidth(x) == doctest::Approx(0.9 * std::min(sd, iqr / 1.34) * std::pow(5.0, -0.2)));

  // IQR zero: sd alone
  const std::vector<double> spiky{0, 0, 0, 0, 0, 0, 0, 5};
  double m = 5.0 / 8.0, s2 = 0.0;
  for (double v : spiky) s2 += (v - m) * (v - m);
  CHECK(lgm::silverman_bandwidth(spiky) == doctest::Approx(0.9 * std::sqrt(s2 / 7.0) * std::pow(8.0, -0.2)));
}

TEST_CASE("silverman bandwidth is scale equivariant") {
  const auto x = normal_column(300, 2);
  std::vector<double> scaled = x;
  for (double& v : scaled) v *= 3.5;
  CHECK(lgm::silverman_bandwidth(scaled) == doctest::Approx(3.5 * lgm::silverman_bandwidth(x)).epsilon(1e-12));
}

TEST_CASE("degenerate columns are rejected") {
  const std::vector<double> constant(10, 2.5);
  CHECK_THROWS_AS(lgm::silverman_bandwidth(constant), lgm::DataError);
  CHECK_THROWS_AS(lgm::fit_marginal(constant), lgm::DataError);
  const std::vector<double> one{1.0};
  CHECK_THROWS_AS(lgm::fit_marginal(one), lgm::DataError);
  CHECK_THROWS_AS(MarginalModel({1.0, 2.0}, 0.0), lgm::DataError);
  CHECK_THROWS_AS(MarginalModel({1.0, NAN}, 1.0), lgm::DataError);
}

TEST_CASE("two-point marginal") {
  const std::vector<double> x{0.0, 1.0};
  const auto m = lgm::fit_marginal(x);
  CHECK(m.size() == 2);
  CHECK(m.bandwidth() == doctest::Approx(lgm::silverman_bandwidth(x)));
  // symmetric unimodal case (h large relative to the gap): peak at the mean
  const MarginalModel wide({0.0, 1.0}, 1.0);
  CHECK(wide.pdf(0.5) >= wide.pdf(0.3));
  CHECK(wide.pdf(0.5) >= wide.pdf(0.7));
  CHECK(wide.pdf(0.5) == doctest::Approx(wide.pdf(0.5 + 1e-3)).epsilon(1e-5));
}

TEST_CASE("cdf far tail") {
  const auto m = lgm::fit_marginal(normal_column(50, 4));
  const double lo = m.centers().front() - 12.0 * m.bandwidth();
  CHECK(m.cdf(lo) < 1e-9);
  CHECK(m.cdf(m.centers().back() + 12.0 * m.bandwidth()) > 1.0 - 1e-9);
}

TEST_CASE("symmetric data") {
  const MarginalModel m({-1.0, 1.0}, 0.7);
  CHECK(m.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(std::abs(m.inverse_cdf(0.5)) < 1e-8);
}

TEST_CASE("cdf matches the direct mixture") {
  const auto x = normal_column(400, 8);
  const auto m = lgm::fit_marginal(x);
  for (double t = -6.0; t <= 6.0; t += 0.137)
    CHECK(m.cdf(t) == doctest::Approx(direct_cdf(x, m.bandwidth(), t)).epsilon(1e-13).scale(0.0));
}

TEST_CASE("inverse cdf") {
  const auto x = normal_column(300, 9);
  const auto m = lgm::fit_marginal(x);
  for (double v : x) CHECK(std::abs(m.inverse_cdf(m.cdf(v)) - v) < 1e-8);
  for (double u : {1e-12, 1e-6, 0.01, 0.3, 0.5, 0.77, 0.999, 1.0 - 1e-9}) {
    const double q = m.inverse_cdf(u);
    CHECK(std::abs(m.cdf(q) - u) <= 1e-10);
  }
  // beyond the tabulated range
  const double deep = m.inverse_cdf(1e-300);
  CHECK(std::isfinite(deep));
  CHECK(deep < m.centers().front() - 12.0 * m.bandwidth());

  CHECK_THROWS_AS(m.inverse_cdf(0.0), lgm::InvalidArgument);
  CHECK_THROWS_AS(m.inverse_cdf(1.0), lgm::InvalidArgument);
  CHECK_THROWS_AS(m.inverse_cdf(-0.1), lgm::InvalidArgument);
  CHECK_THROWS_AS(m.inverse_cdf(NAN), lgm::InvalidArgument);
}

TEST_CASE("cdf is strictly increasing") {
  const auto m = lgm::fit_marginal(normal_column(100, 12));
  double prev = m.cdf(-8.0);
  for (double t = -7.9; t <= 4.0; t += 0.1) {
    const double c = m.cdf(t);
    CHECK(c > prev);
    prev = c;
  }
}

TEST_CASE("pdf integrates to one") {
  auto x = normal_column(80, 13);
  x.push_back(6.0);  // bimodal-ish tail
  const auto m = lgm::fit_marginal(x);
  const double lo = m.centers().front() - 10 * m.bandwidth();
  const double hi = m.centers().back() + 10 * m.bandwidth();
  const double integral = oracle::simpson([&](double t) { return m.pdf(t); }, lo, hi, 20000);
  CHECK(integral == doctest::Approx(1.0).epsilon(1e-6));
  for (double t = lo; t < hi; t += 0.05) CHECK(m.pdf(t) >= 0.0);
}

TEST_CASE("probability integral transform of model samples") {
  const auto m = lgm::fit_marginal(normal_column(500, 14));
  lgm::Rng rng(99);
  std::vector<double> u;
  for (int i = 0; i < 10000; ++i) u.push_back(m.cdf(m.sample(rng)));
  CHECK(oracle::ks_uniform(u).p_value > 0.01);
}
