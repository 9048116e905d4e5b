#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "oracles.hpp"
#include "rmtfactor/divergence.hpp"
#include "rmtfactor/empirical_spectrum.hpp"
#include "rmtfactor/error.hpp"

using namespace rmtfactor;

namespace {

Eigen::MatrixXd gaussian(Eigen::Index n, Eigen::Index t, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  Eigen::MatrixXd m(n, t);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

StandardizedWindow as_window(Eigen::MatrixXd m) {
  return StandardizedWindow{std::move(m), 0};
}

}  // namespace

TEST_CASE("p = 0 keeps the window") {
  auto w = as_window(gaussian(6, 20, 1));
  auto d = decompose(w, 0);
  CHECK(d.factors.rows() == 0);
  CHECK(d.loadings.cols() == 0);
  CHECK(d.residual == w.values);
}

TEST_CASE("invalid factor counts") {
  auto w = as_window(gaussian(6, 20, 1));
  CHECK_THROWS_AS(decompose(w, -1), Error);
  CHECK_THROWS_AS(decompose(w, 7), Error);
  try {
    decompose(w, 7);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::kInvalidFactorCount);
  }
}

TEST_CASE("rank-1 window is annihilated by one factor") {
  Eigen::VectorXd a = gaussian(8, 1, 2).col(0);
  Eigen::RowVectorXd f = gaussian(1, 30, 3).row(0);
  auto d = decompose(as_window(a * f), 1);
  CHECK(d.residual.cwiseAbs().maxCoeff() < 1e-8);
  CHECK((d.factors * d.factors.transpose() - Eigen::MatrixXd::Identity(1, 1)).norm() < 1e-12);
}

TEST_CASE("p = 3 reproduces the best rank-3 approximation") {
  for (auto [n, t] : {std::pair{10, 40}, std::pair{40, 10}}) {
    Eigen::MatrixXd x = gaussian(n, t, 11);
    auto d = decompose(as_window(x), 3);

    // independent route: full symmetric eigendecomposition of X X^T
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(x * x.transpose());
    const Eigen::VectorXd ev = es.eigenvalues();  // ascending
    const Eigen::MatrixXd top = es.eigenvectors().rightCols(3);
    const Eigen::MatrixXd best = top * top.transpose() * x;
    CHECK((d.loadings * d.factors - best).cwiseAbs().maxCoeff() < 1e-8);

    const double discarded = ev.head(n - 3).sum();
    CHECK(std::abs(d.residual.squaredNorm() - discarded) < 1e-6);
    CHECK((d.factors * d.factors.transpose() - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-10);
    for (int k = 0; k < 3; ++k) {
      Eigen::Index at;
      d.factors.row(k).cwiseAbs().maxCoeff(&at);
      CHECK(d.factors(k, at) > 0.0);
    }
  }
}

TEST_CASE("residual covariance basics") {
  FactorDecomposition d;
  const int n = 4, t = 12;
  Eigen::MatrixXd q = Eigen::HouseholderQR<Eigen::MatrixXd>(gaussian(t, t, 5)).householderQ();
  d.residual = std::sqrt(static_cast<double>(t)) * q.topRows(n);
  auto c = residual_covariance(d, t);
  CHECK((c.matrix - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-12);

  d.residual = Eigen::MatrixXd::Zero(n, t);
  CHECK(residual_covariance(d, t).matrix.cwiseAbs().maxCoeff() == 0.0);
  CHECK_THROWS_AS(residual_covariance(d, t + 1), Error);
}

TEST_CASE("i.i.d. noise eigenvalues stay inside the MP support") {
  const int n = 118, t = 250;
  const double c = static_cast<double>(n) / t;
  std::size_t outside = 0, total = 0;
  for (int trial = 0; trial < 30; ++trial) {
    auto d = decompose(as_window(gaussian(n, t, 100 + trial)), 0);
    for (double l : sorted_eigenvalues(residual_covariance(d, t).matrix)) {
      outside += (l < oracle::mp_lower(c) || l > oracle::mp_upper(c));
      ++total;
    }
  }
  CHECK(static_cast<double>(outside) / total < 0.02);
}

TEST_CASE("histogram density") {
  auto h = histogram_density(std::vector<double>{0.5, 1.5}, {0.0, 1.0, 2.0});
  CHECK(h.density.masses == std::vector<double>{0.5, 0.5});

  std::vector<double> same(7, 1.3);
  auto one = histogram_density(same, uniform_edges(0, 2, 10));
  CHECK(*std::max_element(one.density.masses.begin(), one.density.masses.end()) == 1.0);

  auto clamped = histogram_density(std::vector<double>{-1.0, 0.5, 5.0}, {0.0, 1.0, 2.0});
  CHECK(clamped.clamped_below == 1);
  CHECK(clamped.clamped_above == 1);
  CHECK(clamped.density.masses[0] == doctest::Approx(2.0 / 3.0));
  CHECK_THROWS_AS(uniform_edges(0, 1, 1), Error);
}

TEST_CASE("noise histogram averaged over trials is close to the binned MP law") {
  const int n = 118, t = 250;
  const double c = static_cast<double>(n) / t;
  const auto edges = shared_bin_edges(oracle::mp_upper(c), oracle::mp_upper(c), 100);
  std::vector<double> mp(100);
  for (int k = 0; k < 100; ++k) mp[k] = oracle::mp_mass(edges[k], edges[k + 1], c, 2000);
  const double s = std::accumulate(mp.begin(), mp.end(), 0.0);
  for (auto& v : mp) v /= s;

  std::vector<double> avg(100, 0.0);
  for (int trial = 0; trial < 30; ++trial) {
    auto d = decompose(as_window(gaussian(n, t, 500 + trial)), 0);
    auto e = empirical_density(residual_covariance(d, t), edges);
    for (int k = 0; k < 100; ++k) avg[k] += e.density.masses[k] / 30.0;
  }
  CHECK(js_divergence(avg, mp) < 0.05);
}

TEST_CASE("residual spectra shortcut agrees with decompose") {
  Eigen::MatrixXd x = gaussian(12, 50, 21);
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    x.row(i).array() -= x.row(i).mean();
    x.row(i) /= std::sqrt(x.row(i).squaredNorm() / 50.0);
  }
  auto w = as_window(x);
  ResidualSpectra spectra(w);
  CHECK(spectra.largest() == doctest::Approx(spectra.descending().front()));
  for (int p : {0, 1, 4, 11}) {
    auto fast = spectra.at_level(p);
    auto slow = sorted_eigenvalues(residual_covariance(decompose(w, p), 50).matrix);
    REQUIRE(fast.size() == slow.size());
    for (std::size_t k = 0; k < fast.size(); ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-9);
  }
}

TEST_CASE("shared bin edges") {
  auto e = shared_bin_edges(2.0, 3.0, 100);
  CHECK(e.size() == 101);
  CHECK(e.front() == 0.0);
  CHECK(e.back() == doctest::Approx(3.15));
  CHECK(shared_bin_edges(5.0, 3.0, 10).back() == doctest::Approx(5.25));
}

TEST_CASE("trace, monotone top eigenvalue and nested factors") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto w = as_window(gaussian(15, 60, 900 + seed));
    double previous_top = 1e300;
    Eigen::MatrixXd previous_f;
    for (int p = 0; p <= 5; ++p) {
      auto d = decompose(w, p);
      CHECK((d.loadings * d.factors + d.residual - w.values).cwiseAbs().maxCoeff() < 1e-8);
      auto c = residual_covariance(d, 60);
      CHECK(std::abs(c.matrix.trace() - d.residual.squaredNorm() / 60.0) < 1e-8);
      CHECK((c.matrix - c.matrix.transpose()).cwiseAbs().maxCoeff() < 1e-10);
      const auto eig = sorted_eigenvalues(c.matrix);
      CHECK(eig.front() > -1e-8);
      CHECK(eig.back() <= previous_top + 1e-10);
      previous_top = eig.back();
      if (p > 0) {
        Eigen::MatrixXd gram = d.factors * d.factors.transpose();
        CHECK((gram - Eigen::MatrixXd::Identity(p, p)).cwiseAbs().maxCoeff() < 1e-8);
        for (int k = 0; k + 1 < p; ++k) {
          const double same = (d.factors.row(k) - previous_f.row(k)).cwiseAbs().maxCoeff();
          const double flip = (d.factors.row(k) + previous_f.row(k)).cwiseAbs().maxCoeff();
          CHECK(std::min(same, flip) < 1e-8);
        }
      }
      previous_f = d.factors;
    }
  }
}

TEST_CASE("eigenvalue csv row") {
  std::ostringstream out;
  write_eigenvalue_row(out, 250, std::vector<double>{0.5, 1.25});
  CHECK(out.str() == "250,0.5,1.25\n");
}
