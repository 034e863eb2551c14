#include <doctest.h>

#include <cstdlib>

#include "barbench/parallel.hpp"
#include "barbench/statistics.hpp"

using namespace barbench;

TEST_CASE("batch means on hand values") {
    const MeanSe ms = batch_stats({1.0, 2.0, 3.0, 4.0});
    CHECK(ms.mean == doctest::Approx(2.5));
    CHECK(ms.se == doctest::Approx(std::sqrt(5.0 / 3.0) / 2.0));
    CHECK_THROWS_AS(batch_stats({1.0}), ConfigError);
}

TEST_CASE("ratio of means with per-batch influence") {
    const MeanSe ms = ratio_batch_stats({1.0, 3.0}, {2.0, 2.0});
    CHECK(ms.mean == doctest::Approx(1.0));
    // influences are (1 - 1*2)/2 = -0.5 and (3 - 1*2)/2 = 0.5
    CHECK(ms.se == doctest::Approx(std::sqrt(0.5) / std::sqrt(2.0)));
    CHECK_THROWS_AS(ratio_batch_stats({1.0, 1.0}, {0.0, 0.0}), NumericError);
}

TEST_CASE("weighted atoms merge duplicates in order") {
    const WeightedAtoms a = WeightedAtoms::from({{1.0, 0.5}, {0.0, 1.0}, {1.0, 0.5}});
    REQUIRE(a.atoms.size() == 2);
    CHECK(a.atoms[0] == std::pair{0.0, 1.0});
    CHECK(a.atoms[1] == std::pair{1.0, 1.0});
    CHECK(a.total == doctest::Approx(2.0));
}

TEST_CASE("distance oracles on tiny laws") {
    const WeightedAtoms a = WeightedAtoms::from({{0.0, 1.0}, {1.0, 1.0}});
    const WeightedAtoms b = WeightedAtoms::from({{0.5, 2.0}});
    CHECK(ks_two_sample(a, b) == doctest::Approx(0.5));
    CHECK(w1_two_sample(a, b) == doctest::Approx(0.5));
    CHECK(ks_two_sample(a, a) == doctest::Approx(0.0));
    CHECK(w1_two_sample(a, a) == doctest::Approx(0.0));

    // same-lattice comparison against a cdf given at the lattice points
    const double ks = ks_lattice_vs_cdf(a, 1.0, [](double x) { return x < 0 ? 0.0 : (x < 1 ? 0.6 : 1.0); });
    CHECK(ks == doctest::Approx(0.1));

    // an atom spread over its unit cell reproduces the uniform law exactly
    const WeightedAtoms point = WeightedAtoms::from({{0.0, 1.0}});
    const double smoothed = ks_cell_smoothed_vs_cdf(
        point, 1.0, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(smoothed == doctest::Approx(0.0));

    // plain KS against a continuous cdf sees the full atom
    const double plain =
        ks_vs_continuous_cdf(point, [](double x) { return std::clamp(x, 0.0, 1.0); });
    CHECK(plain == doctest::Approx(1.0));
}

TEST_CASE("integer histograms accumulate dwell mass") {
    IntHistogram h;
    h.add(0, 1.5);
    h.add(2, 0.5);
    h.add(0, 0.5);
    CHECK(h.total == doctest::Approx(2.5));
    const WeightedAtoms atoms = h.atoms(0.25);
    REQUIRE(atoms.atoms.size() == 2);
    CHECK(atoms.atoms[0] == std::pair{0.0, 2.0});
    CHECK(atoms.atoms[1] == std::pair{0.5, 0.5});
    CHECK_THROWS_AS(h.add(-1, 1.0), NumericError);
}

TEST_CASE("worker cap honors the environment") {
    setenv("BARBENCH_THREADS", "1", 1);
    CHECK(max_workers() == 1);
    setenv("BARBENCH_THREADS", "3", 1);
    CHECK(max_workers() == 3);
    unsetenv("BARBENCH_THREADS");
    CHECK(max_workers() >= 1);

    std::vector<int> out(10, 0);
    parallel_for(out.size(), [&](std::size_t i) { out[i] = static_cast<int>(i) * 2; });
    for (std::size_t i = 0; i < out.size(); ++i) CHECK(out[i] == static_cast<int>(i) * 2);
}
