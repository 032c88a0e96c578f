#include <catch2/catch_amalgamated.hpp>

#include "tal/rng.hpp"

TEST_CASE("rng streams are deterministic", "[rng]") {
    tal::Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) REQUIRE(a.next_u64() == b.next_u64());
}

TEST_CASE("derived seeds differ by label and index", "[rng]") {
    const auto base = tal::derive_seed(7, "train");
    REQUIRE(base != tal::derive_seed(7, "synth"));
    REQUIRE(tal::derive_seed(7, "corpus", 0) != tal::derive_seed(7, "corpus", 1));
    REQUIRE(tal::derive_seed(7, "corpus", 3) == tal::derive_seed(7, "corpus", 3));
    REQUIRE(tal::derive_seed(8, "corpus", 3) != tal::derive_seed(7, "corpus", 3));
}

TEST_CASE("uniform stays in range and normal has sane moments", "[rng]") {
    tal::Rng rng(1);
    double sum = 0.0, sum_sq = 0.0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform(-0.5, 0.5);
        REQUIRE(u >= -0.5);
        REQUIRE(u < 0.5);
        const double g = rng.normal();
        sum += g;
        sum_sq += g * g;
    }
    REQUIRE(std::abs(sum / n) < 0.03);
    REQUIRE(std::abs(sum_sq / n - 1.0) < 0.05);
}

TEST_CASE("shuffle is a permutation", "[rng]") {
    tal::Rng rng(3);
    std::vector<int> v(50);
    for (int i = 0; i < 50; ++i) v[i] = i;
    auto copy = v;
    rng.shuffle(v);
    std::sort(v.begin(), v.end());
    REQUIRE(v == copy);
}
