#include <doctest.h>

#include <cmath>
#include <optional>
#include <vector>

#include "oracles.hpp"
#include "specmatch/errors.hpp"
#include "specmatch/repa.hpp"

using namespace specmatch;

namespace {

TokenMatrix random_tokens(std::size_t t, std::size_t d, Rng& rng,
                          std::optional<GridShape> grid = std::nullopt) {
  TokenMatrix x(t, d, grid);
  for (double& v : x.values()) v = rng.normal() + 0.7;
  return x;
}

std::vector<std::vector<double>> unit_rows(const TokenMatrix& x) {
  std::vector<std::vector<double>> rows;
  for (std::size_t t = 0; t < x.tokens(); ++t) {
    double n = 0.0;
    for (std::size_t d = 0; d < x.dims(); ++d) n += x(t, d) * x(t, d);
    std::vector<double> r(x.dims());
    for (std::size_t d = 0; d < x.dims(); ++d) r[d] = x(t, d) / std::sqrt(n);
    rows.push_back(r);
  }
  return rows;
}

double gauss2(double y, double x, double s) { return std::exp(-(x * x + y * y) / (2.0 * s * s)); }

}  // namespace

TEST_CASE("normalize_tokens") {
  const TokenMatrix x(2, 2, {3.0, 4.0, 0.0, -2.0});
  const auto n = normalize_tokens(x);
  CHECK(n(0, 0) == doctest::Approx(0.6).epsilon(1e-15));
  CHECK(n(0, 1) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(n(1, 1) == -1.0);
  CHECK_THROWS_AS(normalize_tokens(TokenMatrix(3, 2, {1.0, 0.0, 0.0, 0.0, 1.0, 1.0})), DomainError);
}

TEST_CASE("rmsc and directional energy against direct formulas") {
  Rng rng(41);
  double worst_identity = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t t = 2 + rng.below(40), d = 1 + rng.below(8);
    const TokenMatrix x = random_tokens(t, d, rng);
    const auto u = unit_rows(x);

    std::vector<double> m(d, 0.0);
    for (const auto& r : u)
      for (std::size_t k = 0; k < d; ++k) m[k] += r[k] / t;
    double dev = 0.0;
    for (const auto& r : u)
      for (std::size_t k = 0; k < d; ++k) dev += (r[k] - m[k]) * (r[k] - m[k]);
    const double want_rmsc = std::sqrt(dev / t);
    CHECK(rmsc(x) == doctest::Approx(want_rmsc).epsilon(1e-12));
    const auto md = mean_direction(x);
    for (std::size_t k = 0; k < d; ++k) CHECK(md[k] == doctest::Approx(m[k]).epsilon(1e-12));

    double energy = 0.0;
    for (std::size_t k = 0; k < d; ++k) {
      std::vector<double> col(t);
      for (std::size_t i = 0; i < t; ++i) col[i] = u[i][k];
      const auto c = oracle::dct1(col);
      for (std::size_t i = 1; i < t; ++i) energy += c[i] * c[i];
    }
    energy /= t;
    CHECK(directional_energy(x) == doctest::Approx(energy).epsilon(1e-10));

    double m2 = 0.0;
    for (double v : m) m2 += v * v;
    worst_identity = std::max(worst_identity, std::abs(energy - want_rmsc * want_rmsc));
    CHECK(want_rmsc * want_rmsc == doctest::Approx(1.0 - m2).epsilon(1e-10));
  }
  CHECK(worst_identity < 1e-10);

  TokenMatrix same(5, 3);
  for (std::size_t t = 0; t < 5; ++t) {
    same(t, 0) = 1.0;
    same(t, 1) = 2.0;
    same(t, 2) = 2.0;
  }
  CHECK(std::abs(rmsc(same)) < 1e-15);
  CHECK(std::abs(directional_energy(same)) < 1e-15);
  const TokenMatrix opposite(2, 1, {2.0, -5.0});
  CHECK(rmsc(opposite) == doctest::Approx(1.0));
}

TEST_CASE("DoG kernel") {
  const DoGParams p{1.0, 2.0, 1e-6};
  const Field2D k = dog_kernel(p);
  REQUIRE(k.height() == 13);
  double sum = 0.0, peak = 0.0;
  for (double v : k.data()) {
    sum += v;
    peak = std::max(peak, std::abs(v));
  }
  CHECK(std::abs(sum) < 1e-6 * peak);

  // Truncated, separately normalized Gaussians.
  double n1 = 0.0, n2 = 0.0;
  for (int y = -3; y <= 3; ++y)
    for (int x = -3; x <= 3; ++x) n1 += gauss2(y, x, 1.0);
  for (int y = -6; y <= 6; ++y)
    for (int x = -6; x <= 6; ++x) n2 += gauss2(y, x, 2.0);
  for (int y = -6; y <= 6; ++y)
    for (int x = -6; x <= 6; ++x) {
      const double g1 = std::abs(y) <= 3 && std::abs(x) <= 3 ? gauss2(y, x, 1.0) / n1 : 0.0;
      CHECK(k(0, y + 6, x + 6) == doctest::Approx(g1 - gauss2(y, x, 2.0) / n2).epsilon(1e-12));
    }

  CHECK_THROWS_AS(dog_kernel(DoGParams{2.0, 1.0, 1e-6}), DomainError);
  CHECK_THROWS_AS(dog_kernel(DoGParams{0.0, 1.0, 1e-6}), DomainError);
  CHECK_THROWS_AS(dog_kernel(DoGParams{1.0, 2.0, 0.0}), DomainError);
}

TEST_CASE("dog_filter") {
  const DoGParams p{1.0, 2.0, 1e-6};
  const GridShape grid{31, 29};
  const std::size_t n = grid.height * grid.width;

  TokenMatrix constant(n, 2, grid);
  for (std::size_t t = 0; t < n; ++t) {
    constant(t, 0) = 4.0;
    constant(t, 1) = -1.5;
  }
  const auto flat = dog_filter(constant, p);
  for (double v : flat.values()) CHECK(std::abs(v) < 1e-12);

  // An interior impulse reproduces the kernel, scaled by the channel std.
  TokenMatrix impulse(n, 1, grid);
  const std::size_t cy = 15, cx = 14;
  impulse(cy * grid.width + cx, 0) = 1.0;
  const double sd = std::sqrt(1.0 / n - 1.0 / (static_cast<double>(n) * n));
  const Field2D k = dog_kernel(p);
  const auto out = dog_filter(impulse, p);
  for (std::size_t y = 0; y < grid.height; ++y)
    for (std::size_t x = 0; x < grid.width; ++x) {
      const auto dy = static_cast<int>(y) - static_cast<int>(cy);
      const auto dx = static_cast<int>(x) - static_cast<int>(cx);
      const double want = std::abs(dy) <= 6 && std::abs(dx) <= 6 ? k(0, dy + 6, dx + 6) / (sd + 1e-6) : 0.0;
      CHECK(std::abs(out(y * grid.width + x, 0) - want) < 1e-10);
    }

  CHECK_THROWS_AS(dog_filter(TokenMatrix(6, 1), p), ShapeError);
}

TEST_CASE("spatial_normalize") {
  Rng rng(42);
  const GridShape grid{6, 7};
  const TokenMatrix z = random_tokens(42, 5, rng, grid);
  const auto s = spatial_normalize(z, 1.0, 1e-6);
  for (std::size_t d = 0; d < 5; ++d) {
    double mean = 0.0, var = 0.0;
    for (std::size_t t = 0; t < 42; ++t) mean += s(t, d) / 42.0;
    for (std::size_t t = 0; t < 42; ++t) var += (s(t, d) - mean) * (s(t, d) - mean) / 42.0;
    CHECK(std::abs(mean) < 1e-10);
    CHECK(std::sqrt(var) == doctest::Approx(1.0).epsilon(1e-5));
  }
  // alpha = 0 keeps the mean and only rescales.
  const auto keep = spatial_normalize(z, 0.0, 0.0);
  const auto full = spatial_normalize(z, 1.0, 0.0);
  for (std::size_t d = 0; d < 5; ++d) {
    double m = 0.0;
    for (std::size_t t = 0; t < 42; ++t) m += keep(t, d) / 42.0;
    CHECK(full(0, d) == doctest::Approx(keep(0, d) - m).epsilon(1e-12));
  }
  CHECK_THROWS_AS(spatial_normalize(TokenMatrix(4, 2), 1.0, 1e-6), ShapeError);
}

TEST_CASE("cosine_similarity_map") {
  const TokenMatrix z(4, 2, {1.0, 0.0, 0.0, 3.0, -2.0, 0.0, 1.0, 1.0});
  const auto c = cosine_similarity_map(z, 0);
  REQUIRE(c.size() == 4);
  CHECK(c[0] == doctest::Approx(1.0));
  CHECK(std::abs(c[1]) < 1e-15);
  CHECK(c[2] == doctest::Approx(-1.0));
  CHECK(c[3] == doctest::Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(cosine_similarity_map(z, 4), SizeError);
}
