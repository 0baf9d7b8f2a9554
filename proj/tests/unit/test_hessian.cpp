#include <doctest.h>

#include <cmath>
#include <random>

#include <hessvessel/error.hpp>
#include <hessvessel/hessian.hpp>
#include <hessvessel/phantom.hpp>

#include "../oracles/direct.hpp"
#include "../oracles/jacobi.hpp"
#include "../support.hpp"

using namespace hessvessel;

namespace {

Volume from_function(Dims d, double (*f)(double, double, double)) {
  Volume v(d);
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) v(x, y, z) = static_cast<float>(f(x, y, z));
  return v;
}

// out(x, y, z) = in(y, z, x): axis order rotated.
Volume rotate_axes(const Volume& in) {
  const Dims d = in.dims();
  Volume out(Dims{d.ny, d.nz, d.nx});
  for (std::size_t z = 0; z < d.nz; ++z)
    for (std::size_t y = 0; y < d.ny; ++y)
      for (std::size_t x = 0; x < d.nx; ++x) out(y, z, x) = in(x, y, z);
  return out;
}

}  // namespace

TEST_SUITE("hessian-core") {

TEST_CASE("gaussian_smooth: identity, DC and parameter checks") {
  const Volume v = testing_support::random_volume({7, 6, 5}, 1);
  CHECK(gaussian_smooth(v, 0.0) == v);
  const Volume c(Dims{9, 8, 7}, {1, 1, 1}, 3.25f);
  for (double s : {0.5, 1.0, 2.5}) {
    const Volume g = gaussian_smooth(c, s);
    for (float x : g.data()) CHECK(std::fabs(x - 3.25f) <= 1e-6);
  }
  CHECK_THROWS_AS(gaussian_smooth(v, -1.0), ParameterError);
  const auto k = gaussian_kernel(1.0);
  CHECK(k.size() == 9);
  double s = 0.0;
  for (double w : k) s += w;
  CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gaussian_smooth: impulse response matches direct 3D convolution") {
  Volume v(Dims{13, 13, 13});
  v(6, 6, 6) = 1.0f;
  const Volume g = gaussian_smooth(v, 1.0);
  const auto ref = oracle::gaussian_direct(v, 1.0);
  const auto k = gaussian_kernel(1.0);
  CHECK(g(6, 6, 6) == doctest::Approx(k[4] * k[4] * k[4]).epsilon(1e-6));
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::fabs(g[i] - ref[i]) <= 1e-7);
}

TEST_CASE("gaussian_smooth: random volume with borders matches direct convolution") {
  const Volume v = testing_support::random_volume({9, 7, 6}, 8);
  const Volume g = gaussian_smooth(v, 1.3);
  const auto ref = oracle::gaussian_direct(v, 1.3);
  for (std::size_t i = 0; i < g.size(); ++i) CHECK(std::fabs(g[i] - ref[i]) <= 1e-5);
}

TEST_CASE("gaussian_smooth commutes with axis permutation") {
  const Volume v = testing_support::random_volume({10, 8, 6}, 4);
  const Volume a = rotate_axes(gaussian_smooth(v, 1.2));
  const Volume b = gaussian_smooth(rotate_axes(v), 1.2);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(std::fabs(a[i] - b[i]) <= 1e-6);
}

TEST_CASE("hessian_field: exact on polynomials") {
  const Dims d{9, 9, 9};
  SUBCASE("constant") {
    const HessianField h = hessian_field(Volume(d, {1, 1, 1}, 5.0f), 1.5);
    for (std::size_t i = 0; i < d.size(); ++i) {
      for (double c : h.at(i)) CHECK(c == 0.0);
    }
  }
  SUBCASE("x^2") {
    const HessianField h = hessian_field(from_function(d, [](double x, double, double) { return x * x; }), 0.0);
    for (std::size_t z = 1; z + 1 < 9; ++z)
      for (std::size_t y = 1; y + 1 < 9; ++y)
        for (std::size_t x = 1; x + 1 < 9; ++x) {
          const auto c = h.at(d.index(x, y, z));
          CHECK(c[0] == 2.0);
          for (int j = 1; j < 6; ++j) CHECK(c[j] == 0.0);
        }
  }
  SUBCASE("x*y") {
    const HessianField h = hessian_field(from_function(d, [](double x, double y, double) { return x * y; }), 0.0);
    for (std::size_t z = 1; z + 1 < 9; ++z)
      for (std::size_t y = 1; y + 1 < 9; ++y)
        for (std::size_t x = 1; x + 1 < 9; ++x) {
          const auto c = h.at(d.index(x, y, z));
          CHECK(c[3] == 1.0);
          CHECK(c[0] == 0.0);
          CHECK(c[1] == 0.0);
          CHECK(c[4] == 0.0);
          CHECK(c[5] == 0.0);
        }
  }
  SUBCASE("too small") {
    CHECK_THROWS_AS(hessian_field(Volume(Dims{4, 9, 9}), 0.0), ShapeError);
  }
}

TEST_CASE("hessian_field is linear") {
  const Volume a = testing_support::random_volume({8, 7, 6}, 10);
  const Volume b = testing_support::random_volume({8, 7, 6}, 11);
  Volume mix(a.dims());
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.0f * a[i] - 0.5f * b[i];
  const auto ha = hessian_field(a, 1.0), hb = hessian_field(b, 1.0), hm = hessian_field(mix, 1.0);
  for (std::size_t i = 0; i < mix.size(); ++i) {
    const auto ca = ha.at(i), cb = hb.at(i), cm = hm.at(i);
    for (int j = 0; j < 6; ++j) CHECK(std::fabs(cm[j] - (2.0 * ca[j] - 0.5 * cb[j])) <= 1e-6);
  }
}

TEST_CASE("eig_sym3: examples") {
  auto e = eig_sym3(0, 0, 0, 0, 0, 0);
  CHECK(e.l1 == 0.0);
  CHECK(e.l2 == 0.0);
  CHECK(e.l3 == 0.0);
  e = eig_sym3(3, 1, 2, 0, 0, 0);
  CHECK(e.l1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.l2 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(e.l3 == doctest::Approx(3.0).epsilon(1e-12));
  e = eig_sym3(2, 2, 5, 1, 0, 0);
  CHECK(e.l1 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.l2 == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(e.l3 == doctest::Approx(5.0).epsilon(1e-12));
  e = eig_sym3(-4, 1, 0.5, 0, 0, 0);
  CHECK(e.l1 == doctest::Approx(0.5));
  CHECK(e.l2 == doctest::Approx(1.0));
  CHECK(e.l3 == doctest::Approx(-4.0));
  e = eig_sym3(2, 2, 2, 0, 0, 0);
  CHECK(e.l1 == doctest::Approx(2.0));
  CHECK(e.l3 == doctest::Approx(2.0));
  CHECK_THROWS_AS(eig_sym3(std::nan(""), 0, 0, 0, 0, 0), NumericError);
  CHECK_THROWS_AS(eig_sym3(0, 0, 0, INFINITY, 0, 0), NumericError);
}

TEST_CASE("eig_sym3: random matrices against Jacobi rotations") {
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 1000; ++trial) {
    const double s = trial % 3 == 0 ? 100.0 : 1.0;
    const double xx = s * u(rng), yy = s * u(rng), zz = s * u(rng);
    const double xy = s * u(rng), xz = s * u(rng), yz = s * u(rng);
    const oracle::Mat3 m{{{xx, xy, xz}, {xy, yy, yz}, {xz, yz, zz}}};
    const auto e = eig_sym3(xx, yy, zz, xy, xz, yz);
    const double norm = oracle::frobenius(m);
    REQUIRE(std::fabs(e.l1) <= std::fabs(e.l2));
    REQUIRE(std::fabs(e.l2) <= std::fabs(e.l3));

    std::array<double, 3> got{e.l1, e.l2, e.l3};
    std::sort(got.begin(), got.end());
    const auto ref = oracle::jacobi_eigenvalues(m);
    for (int i = 0; i < 3; ++i) CHECK(std::fabs(got[i] - ref[i]) <= 1e-9 * std::max(1.0, norm));

    for (double l : got) {
      oracle::Mat3 shifted = m;
      for (int i = 0; i < 3; ++i) shifted[i][i] -= l;
      CHECK(std::fabs(oracle::det3(shifted)) <= 1e-8 * std::max(1.0, norm * norm * norm));
    }
    const double trace = xx + yy + zz;
    CHECK(std::fabs(e.l1 + e.l2 + e.l3 - trace) <= 1e-9 * std::max(1.0, norm));
    CHECK(std::fabs(e.l1 * e.l2 * e.l3 - oracle::det3(m)) <=
          1e-8 * std::max(1.0, norm * norm * norm));
  }
}

TEST_CASE("eig_sym3: near-degenerate spectra") {
  const auto e = eig_sym3(1.0, 1.0 + 1e-13, 1.0, 1e-14, 0.0, 0.0);
  CHECK(e.l1 == doctest::Approx(1.0));
  CHECK(e.l3 == doctest::Approx(1.0));
  CHECK(std::isfinite(e.l2));
}

TEST_CASE("eig_field: ordering, trace and constant input") {
  const HessianField zero = hessian_field(Volume(Dims{6, 6, 6}, {1, 1, 1}, 2.0f), 1.0);
  const EigenVolumes ez = eig_field(zero);
  for (const Volume* v : {&ez.l1, &ez.l2, &ez.l3})
    for (float x : v->data()) CHECK(x == 0.0f);

  const HessianField h = hessian_field(testing_support::random_volume({10, 9, 8}, 5), 1.0);
  const EigenVolumes e = eig_field(h);
  for (std::size_t i = 0; i < e.l1.size(); ++i) {
    CHECK(std::fabs(e.l1[i]) <= std::fabs(e.l2[i]));
    CHECK(std::fabs(e.l2[i]) <= std::fabs(e.l3[i]));
    const double trace = double(h.xx[i]) + h.yy[i] + h.zz[i];
    CHECK(std::fabs(double(e.l1[i]) + e.l2[i] + e.l3[i] - trace) <= 1e-6);
  }
}

TEST_CASE("eig_field: bright tube signature on the centreline") {
  PhantomSpec spec;
  spec.dims = {40, 40, 40};
  spec.tubes.push_back({{2.0, 20.0, 20.0}, {37.0, 20.0, 20.0}, 2.5, 1.0});
  const Phantom ph = make_phantom(spec);
  const EigenVolumes e = eig_field(hessian_field(ph.volume, 2.5));
  for (std::size_t x = 12; x <= 28; x += 4) {
    const std::size_t i = spec.dims.index(x, 20, 20);
    const double l1 = e.l1[i], l2 = e.l2[i], l3 = e.l3[i];
    CHECK(std::fabs(l1) < 0.3 * std::fabs(l2));
    CHECK(l2 < 0.0);
    CHECK(l3 < 0.0);
    CHECK(std::fabs(l2) / std::fabs(l3) >= 0.5);
    CHECK(std::fabs(l2) / std::fabs(l3) <= 1.0);
  }
}

TEST_CASE("hessian stencil matches hessian_field at sigma 0 and its adjoint is exact") {
  const Volume v = testing_support::random_volume({7, 6, 5}, 12);
  const Dims d = v.dims();
  std::vector<double> in(v.data().begin(), v.data().end());
  std::array<std::vector<double>, 6> out;
  for (auto& o : out) o.assign(d.size(), 0.0);
  stencil::hessian<double>(in, d, {out[0], out[1], out[2], out[3], out[4], out[5]});
  const HessianField h = hessian_field(v, 0.0);
  for (std::size_t i = 0; i < d.size(); ++i) {
    const auto c = h.at(i);
    for (int j = 0; j < 6; ++j) CHECK(std::fabs(out[j][i] - c[j]) <= 1e-5);
  }

  // <H x, y> == <x, H^T y>
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::array<std::vector<double>, 6> ys;
  double lhs = 0.0;
  for (int j = 0; j < 6; ++j) {
    ys[j].resize(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      ys[j][i] = n01(rng);
      lhs += out[j][i] * ys[j][i];
    }
  }
  std::vector<double> back(d.size(), 0.0);
  stencil::hessian_adjoint<double>({ys[0], ys[1], ys[2], ys[3], ys[4], ys[5]}, d, back);
  double rhs = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) rhs += in[i] * back[i];
  CHECK(lhs == doctest::Approx(rhs).epsilon(1e-10));
}

TEST_CASE("max_frobenius_norm equals the largest eigenvalue norm") {
  const HessianField h = hessian_field(testing_support::random_volume({8, 8, 8}, 14), 0.8);
  const EigenVolumes e = eig_field(h);
  double best = 0.0;
  for (std::size_t i = 0; i < e.l1.size(); ++i) {
    best = std::max(best, std::sqrt(double(e.l1[i]) * e.l1[i] + double(e.l2[i]) * e.l2[i] +
                                    double(e.l3[i]) * e.l3[i]));
  }
  CHECK(max_frobenius_norm(h) == doctest::Approx(best).epsilon(1e-5));
}

}  // TEST_SUITE
