#include <doctest.h>

#include <cstring>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vabal/kernels.hpp"
#include "vabal/rng.hpp"

namespace kern = vabal::kern;

namespace {

std::vector<double> random_matrix(std::size_t n, vabal::RngStream& rng) {
  std::vector<double> m(n);
  for (double& v : m) v = rng.normal();
  return m;
}

// straightforward j-inner reference, independent accumulation order per cell
std::vector<double> naive_mm(const std::vector<double>& a, const std::vector<double>& b,
                             std::size_t m, std::size_t k, std::size_t n) {
  std::vector<double> c(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t l = 0; l < k; ++l) c[i * n + j] += a[i * k + l] * b[l * n + j];
  return c;
}

}  // namespace

TEST_SUITE("kernels") {

TEST_CASE("matmul matches a naive reference") {
  vabal::RngStream rng(5, "kern");
  const std::size_t m = 7, k = 5, n = 9;
  const auto a = random_matrix(m * k, rng);
  const auto b = random_matrix(k * n, rng);
  std::vector<double> c(m * n);
  kern::matmul_serial(a.data(), b.data(), c.data(), m, k, n);
  const auto ref = naive_mm(a, b, m, k, n);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(ref[i]).epsilon(1e-12));
}

TEST_CASE("nt and tn variants match explicit transposes") {
  vabal::RngStream rng(6, "kern");
  const std::size_t m = 6, k = 4, n = 8;
  const auto a = random_matrix(m * k, rng);
  const auto bt = random_matrix(n * k, rng);  // b stored as [n,k]
  std::vector<double> b(k * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < k; ++j) b[j * n + i] = bt[i * k + j];
  std::vector<double> c1(m * n), c2(m * n);
  kern::matmul_nt_serial(a.data(), bt.data(), c1.data(), m, k, n);
  kern::matmul_serial(a.data(), b.data(), c2.data(), m, k, n);
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i] == doctest::Approx(c2[i]));

  const auto x = random_matrix(m * k, rng);
  const auto y = random_matrix(m * n, rng);
  std::vector<double> xt(k * m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) xt[j * m + i] = x[i * k + j];
  std::vector<double> d1(k * n), d2(k * n);
  kern::matmul_tn_serial(x.data(), y.data(), d1.data(), m, k, n);
  kern::matmul_serial(xt.data(), y.data(), d2.data(), k, m, n);
  for (std::size_t i = 0; i < d1.size(); ++i) CHECK(d1[i] == doctest::Approx(d2[i]));
}

TEST_CASE("parallel kernels are bit-identical to the serial reference") {
#ifdef _OPENMP
  const int saved = omp_get_max_threads();
  omp_set_num_threads(4);  // force real partitioning even on one core
#endif
  vabal::RngStream rng(7, "kern");
  for (auto [m, k, n] : {std::tuple<std::size_t, std::size_t, std::size_t>{33, 17, 25},
                         {128, 64, 64},
                         {100, 40, 128},
                         {1, 10, 10}}) {
    const auto a = random_matrix(m * k, rng);
    const auto b = random_matrix(k * n, rng);
    std::vector<double> cs(m * n), cp(m * n);
    kern::matmul_serial(a.data(), b.data(), cs.data(), m, k, n);
    kern::matmul_parallel(a.data(), b.data(), cp.data(), m, k, n);
    CHECK(std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(double)) == 0);

    const auto bt = random_matrix(n * k, rng);
    kern::matmul_nt_serial(a.data(), bt.data(), cs.data(), m, k, n);
    kern::matmul_nt_parallel(a.data(), bt.data(), cp.data(), m, k, n);
    CHECK(std::memcmp(cs.data(), cp.data(), cs.size() * sizeof(double)) == 0);

    const auto y = random_matrix(m * n, rng);
    std::vector<double> ds(k * n), dp(k * n);
    kern::matmul_tn_serial(a.data(), y.data(), ds.data(), m, k, n);
    kern::matmul_tn_parallel(a.data(), y.data(), dp.data(), m, k, n);
    CHECK(std::memcmp(ds.data(), dp.data(), ds.size() * sizeof(double)) == 0);
  }
#ifdef _OPENMP
  omp_set_num_threads(saved);
#endif
}

TEST_CASE("accumulate mode adds on top of existing output") {
  vabal::RngStream rng(8, "kern");
  const std::size_t m = 3, k = 4, n = 2;
  const auto a = random_matrix(m * k, rng);
  const auto b = random_matrix(k * n, rng);
  std::vector<double> c(m * n, 1.0), fresh(m * n);
  kern::matmul_serial(a.data(), b.data(), fresh.data(), m, k, n);
  kern::matmul_serial(a.data(), b.data(), c.data(), m, k, n, true);
  for (std::size_t i = 0; i < c.size(); ++i) CHECK(c[i] == doctest::Approx(1.0 + fresh[i]));
}

}  // TEST_SUITE
