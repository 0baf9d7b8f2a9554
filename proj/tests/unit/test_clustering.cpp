#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <json.hpp>

#include <hessvessel/clustering.hpp>
#include <hessvessel/error.hpp>

#include "../oracles/direct.hpp"
#include "../support.hpp"

using namespace hessvessel;

namespace {

IntensityHistogram hist(std::vector<double> freq) {
  IntensityHistogram h;
  h.freq = std::move(freq);
  h.edges.resize(h.freq.size() + 1);
  for (std::size_t i = 0; i < h.edges.size(); ++i) h.edges[i] = double(i);
  return h;
}

// Two planted groups with small jitter inside and between them.
DistanceMatrix planted(std::size_t n, std::size_t first_group, std::uint64_t seed,
                       std::vector<int>* truth = nullptr) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(0.0, 0.05);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<int> group(n);
  for (std::size_t r = 0; r < n; ++r) group[order[r]] = r < first_group ? 0 : 1;
  DistanceMatrix dm{n, std::vector<double>(n * n, 0.0)};
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double base = group[i] == group[j] ? 0.1 : 10.0;
      dm(i, j) = dm(j, i) = base + jitter(rng);
    }
  if (truth) *truth = group;
  return dm;
}

// Labels compared up to renaming.
bool same_partition(const std::vector<std::size_t>& a, const std::vector<int>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j)
      if ((a[i] == a[j]) != (b[i] == b[j])) return false;
  return true;
}

bool same_partition(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
  return same_partition(a, std::vector<int>(b.begin(), b.end()));
}

}  // namespace

TEST_SUITE("clustering") {

TEST_CASE("intensity_histogram: zero removal and normalization") {
  std::vector<float> data(64, 0.0f);
  std::fill(data.begin() + 32, data.end(), 5.0f);
  const IntensityHistogram h = intensity_histogram(Volume(Dims{4, 4, 4}, {1, 1, 1}, data), 256);
  REQUIRE(h.bin_count() == 256);
  CHECK(h.edges.front() == 0.0);
  CHECK(h.edges.back() == 5.0);
  std::size_t occupied = 0;
  for (double f : h.freq) occupied += f > 0.0;
  CHECK(occupied == 1);
  CHECK(h.freq.back() == 1.0);

  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Volume v = testing_support::random_volume({9, 8, 7}, seed, -1.0, 3.0);
    const IntensityHistogram r = intensity_histogram(v, 2 + seed * 7);
    CHECK(std::accumulate(r.freq.begin(), r.freq.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-9));
    for (double f : r.freq) CHECK(f >= 0.0);
  }
  CHECK_THROWS_AS(intensity_histogram(Volume(Dims{3, 3, 3}), 16), DegenerateInputError);
  CHECK_THROWS_AS(intensity_histogram(Volume(Dims{3, 3, 3}, {1, 1, 1}, -2.0f), 16),
                  DegenerateInputError);
  CHECK_THROWS_AS(intensity_histogram(Volume(Dims{3, 3, 3}, {1, 1, 1}, 1.0f), 1), ParameterError);
}

TEST_CASE("intensity_histogram: shared upper bound makes histograms comparable") {
  const Volume a = testing_support::random_volume({6, 6, 6}, 1, 0.0, 2.0);
  const Volume b = testing_support::random_volume({6, 6, 6}, 2, 0.0, 4.0);
  const auto ha = intensity_histogram(a, 32, 4.0), hb = intensity_histogram(b, 32, 4.0);
  CHECK(ha.edges == hb.edges);
  CHECK_NOTHROW(histogram_distance(ha, hb));
  CHECK_THROWS_AS(histogram_distance(intensity_histogram(a, 32), hb), ShapeError);
  CHECK_THROWS_AS(histogram_distance(intensity_histogram(a, 16, 4.0), hb), ShapeError);
}

TEST_CASE("histogram_distance: examples and properties") {
  const auto a = hist({0.5, 0.5, 0.0}), b = hist({0.0, 0.5, 0.5});
  CHECK(histogram_distance(a, a) == 0.0);
  CHECK(histogram_distance(a, b) == 1.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> fa(12), fb(12);
    for (auto& x : fa) x = u(rng);
    for (auto& x : fb) x = u(rng);
    const double sa = std::accumulate(fa.begin(), fa.end(), 0.0);
    const double sb = std::accumulate(fb.begin(), fb.end(), 0.0);
    for (auto& x : fa) x /= sa;
    for (auto& x : fb) x /= sb;
    const auto ha = hist(fa), hb = hist(fb);
    const double d = histogram_distance(ha, hb);
    CHECK(d == histogram_distance(hb, ha));
    CHECK(d >= 0.0);
    CHECK(d <= 2.0);
    CHECK(histogram_distance(ha, ha) == 0.0);
  }
}

TEST_CASE("distance_matrix") {
  const auto a = hist({0.2, 0.8}), b = hist({0.6, 0.4}), c = hist({1.0, 0.0});
  const DistanceMatrix same = distance_matrix({a, a});
  CHECK(same.d == std::vector<double>(4, 0.0));
  const DistanceMatrix dm = distance_matrix({a, b, c});
  CHECK(dm.n == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(dm(i, i) == 0.0);
    for (std::size_t j = 0; j < 3; ++j) CHECK(dm(i, j) == dm(j, i));
  }
  CHECK(dm(0, 2) == doctest::Approx(0.8));
  CHECK_THROWS_AS(distance_matrix({a}), ShapeError);

  const auto j = nlohmann::json::parse(to_json(dm, {"a", "b", "c"}));
  CHECK(j["items"].size() == 3);
  CHECK(j["distances"][0][2] == dm(0, 2));
}

TEST_CASE("ward_cluster: trivial cluster counts") {
  const DistanceMatrix dm = planted(5, 2, 1);
  const ClusterAssignment all = ward_cluster(dm, 5);
  CHECK(all.labels == std::vector<std::size_t>{0, 1, 2, 3, 4});
  CHECK(all.merges.size() == 4);
  const ClusterAssignment one = ward_cluster(dm, 1);
  CHECK(one.labels == std::vector<std::size_t>(5, 0));
  CHECK(one.merges.back().size == 5);
  CHECK_THROWS_AS(ward_cluster(dm, 0), ParameterError);
  CHECK_THROWS_AS(ward_cluster(dm, 6), ParameterError);
}

TEST_CASE("ward_cluster: matrix checks") {
  DistanceMatrix dm = planted(4, 2, 2);
  dm(0, 1) += 1.0;
  CHECK_THROWS_AS(ward_cluster(dm, 2), ShapeError);
  dm = planted(4, 2, 2);
  dm(2, 2) = 0.5;
  CHECK_THROWS_AS(ward_cluster(dm, 2), ShapeError);
  dm = planted(4, 2, 2);
  dm(0, 3) = dm(3, 0) = std::nan("");
  CHECK_THROWS_AS(ward_cluster(dm, 2), ShapeError);
}

TEST_CASE("ward_cluster: planted groups match the exhaustive optimum") {
  for (std::size_t n : {6, 7, 8}) {
    for (std::size_t first = 1; first + 1 < n; ++first) {
      std::vector<int> truth;
      const DistanceMatrix dm = planted(n, first, 100 * n + first, &truth);
      const ClusterAssignment ca = ward_cluster(dm, 2);
      CHECK(same_partition(ca.labels, truth));
      CHECK(same_partition(ca.labels, oracle::best_two_partition(dm.d, n)));
    }
  }
  // The 6-item case with exact distances 0.1 / 10.
  DistanceMatrix dm{6, std::vector<double>(36, 0.0)};
  for (std::size_t i = 0; i < 6; ++i)
    for (std::size_t j = 0; j < 6; ++j)
      if (i != j) dm(i, j) = (i < 3) == (j < 3) ? 0.1 : 10.0;
  CHECK(ward_cluster(dm, 2).labels == std::vector<std::size_t>{0, 0, 0, 1, 1, 1});
}

TEST_CASE("ward_cluster: merge heights are non-decreasing and ids follow the dendrogram") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t n = 3 + trial % 10;
    DistanceMatrix dm{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dm(i, j) = dm(j, i) = u(rng);
    const ClusterAssignment ca = ward_cluster(dm, 1);
    REQUIRE(ca.merges.size() == n - 1);
    for (std::size_t s = 0; s < ca.merges.size(); ++s) {
      if (s > 0) CHECK(ca.merges[s].height >= ca.merges[s - 1].height - 1e-12);
      CHECK(ca.merges[s].left < ca.merges[s].right);
      CHECK(ca.merges[s].right < n + s);
    }
  }
}

TEST_CASE("ward_cluster: permuting the items permutes the partition") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = 4 + trial % 6;
    DistanceMatrix dm{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) dm(i, j) = dm(j, i) = u(rng);
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    DistanceMatrix pm{n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) pm(i, j) = dm(perm[i], perm[j]);
    for (std::size_t k = 1; k <= n; ++k) {
      const auto a = ward_cluster(dm, k).labels;
      const auto b = ward_cluster(pm, k).labels;
      std::vector<std::size_t> b_back(n);
      for (std::size_t i = 0; i < n; ++i) b_back[perm[i]] = b[i];
      CHECK(same_partition(a, b_back));
    }
  }
}

TEST_CASE("cluster assignment JSON") {
  const ClusterAssignment ca = ward_cluster(planted(4, 2, 5), 2);
  const auto j = nlohmann::json::parse(to_json(ca, {"w", "x", "y", "z"}));
  CHECK(j["k"] == 2);
  CHECK(j["labels"].size() == 4);
  CHECK(j["clusters"].size() == 2);
  CHECK(j["merges"].size() == 3);
  CHECK(j["merges"][0].contains("height"));
}

}  // TEST_SUITE
