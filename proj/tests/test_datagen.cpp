// Noise injection, datasets, persistence and partitions.

#include "doctest.h"

#include "sdfkit/datagen.hpp"
#include "sdfkit/errors.hpp"
#include "sdfkit/forward_maps.hpp"
#include "sdfkit/random.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <set>

using namespace sdfkit;
namespace fs = std::filesystem;

namespace {

Signal constant_pd(std::size_t n, double value) {
    const numerics::UniformTimeGrid g(0.1, n);
    return Signal(Channel::PD, g, std::vector<double>(n, value), PDConfig{});
}

fs::path scratch(const char* name) {
    const auto p = fs::temp_directory_path() / name;
    fs::remove_all(p);
    return p;
}

} // namespace

TEST_CASE("random streams are reproducible and well spread") {
    Rng a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a.uniform() == b.uniform());
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    Rng r(7);
    const int n = 100000;
    double m = 0.0, v = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = r.normal();
        m += z;
        v += z * z;
    }
    m /= n;
    v = v / n - m * m;
    CHECK(std::abs(m) < 3.0 / std::sqrt(n) * 2);
    CHECK(v == doctest::Approx(1.0).epsilon(0.02));
    std::vector<int> counts(10, 0);
    for (int i = 0; i < n; ++i) ++counts[r.below(10)];
    for (int c : counts) CHECK(std::abs(c - n / 10) < 5 * std::sqrt(n / 10.0));
}

TEST_CASE("noise: zero dispersion is the identity") {
    const auto s = constant_pd(50, 0.7);
    CHECK(apply_noise(s, NoiseSpec::none(), 1).values == s.values);
    // clip = 0 removes any dispersion even when sigma is set
    CHECK(apply_noise(s, NoiseSpec{NoiseKind::gaussian_multiplicative, 0.1, 0.0, 0.0}, 1).values == s.values);
}

TEST_CASE("noise: clipped Gaussian statistics") {
    const auto s = constant_pd(10000, 1.0);
    const auto n = apply_noise(s, NoiseSpec::clipped_gaussian(0.05, 0.05), 123);
    double mean = 0.0;
    for (double v : n.values) {
        CHECK(v >= 0.95 - 1e-15);
        CHECK(v <= 1.05 + 1e-15);
        mean += v;
    }
    mean /= static_cast<double>(n.values.size());
    CHECK(std::abs(mean - 1.0) < 0.01);
    REQUIRE(n.noise.has_value());
    CHECK(n.noise->seed == 123);
    CHECK(apply_noise(s, NoiseSpec::clipped_gaussian(0.05, 0.05), 123).values == n.values);
    CHECK(apply_noise(s, NoiseSpec::clipped_gaussian(0.05, 0.05), 124).values != n.values);
}

TEST_CASE("noise: positive uniform scheme has mean 0.05 and support (0, 0.1)") {
    const std::size_t N = 20000;
    const auto f = noise_factors(N, NoiseSpec::positive_uniform(), 9);
    double mean = 0.0;
    for (double x : f) {
        CHECK(x >= 1.0);
        CHECK(x <= 1.1);
        mean += x - 1.0;
    }
    mean /= static_cast<double>(N);
    const double sd = 0.1 / std::sqrt(12.0);
    CHECK(std::abs(mean - 0.05) < 3 * sd / std::sqrt(static_cast<double>(N)));
}

TEST_CASE("noise never pushes AD signals outside [-1, 1]") {
    const numerics::UniformTimeGrid g(0.1, 200);
    const auto clean = ad_signal(ADConfig{Lorentzian{0.9, 0.2, 1.0}, 1.0}, g);
    const auto noisy = apply_noise(clean, NoiseSpec{NoiseKind::uniform_multiplicative, 0.3, 0.3, 0.2}, 5);
    for (double v : noisy.values) {
        CHECK(v <= 1.0);
        CHECK(v >= -1.0);
    }
}

TEST_CASE("datasets: collapsed box equals the direct forward map") {
    DatasetSpec spec;
    spec.family = Family::lorentzian;
    spec.box = ParameterBox{{0.4, 0.6, 0.8}, {0.4, 0.6, 0.8}};
    spec.n_instances = 1;
    spec.grid = numerics::UniformTimeGrid(0.1, 100);
    const auto ds = generate_dataset(spec);
    REQUIRE(ds.size() == 1);
    const auto direct = ad_lorentzian_analytic_series(Lorentzian{0.6, 0.4, 0.8}, 1.0, spec.grid.times(),
                                                      resolved_conventions());
    CHECK(ds.instances[0].signal.values == direct);
    CHECK(ds.instances[0].xi == std::vector<double>{0.4, 0.6, 0.8});
}

TEST_CASE("datasets: seeds, box and bit-exact regeneration") {
    DatasetSpec spec;
    spec.n_instances = 30;
    spec.grid = numerics::UniformTimeGrid(0.1, 60);
    spec.noise = NoiseSpec::positive_uniform();
    spec.seed = 77;
    const auto a = generate_dataset(spec);
    const auto b = generate_dataset(spec);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(a.instances[i].xi == b.instances[i].xi);
        CHECK(a.instances[i].signal.values == b.instances[i].signal.values);
        CHECK(spec.box.contains(a.instances[i].xi));
    }
    spec.seed = 78;
    CHECK(generate_dataset(spec).instances[0].xi != a.instances[0].xi);
}

TEST_CASE("datasets: both layouts round trip and regenerate from the manifest") {
    DatasetSpec spec;
    spec.family = Family::ohmic;
    spec.n_instances = 5;
    spec.grid = numerics::UniformTimeGrid(0.2, 20);
    spec.noise = NoiseSpec::clipped_gaussian(0.02, 0.05);
    spec.seed = 3;
    const auto ds = generate_dataset(spec);
    for (auto layout : {DatasetLayout::wide, DatasetLayout::per_instance}) {
        const auto dir = scratch("sdfkit_ds_test");
        write_dataset(ds, dir, layout);
        const auto back = read_dataset(dir);
        REQUIRE(back.size() == ds.size());
        for (std::size_t i = 0; i < ds.size(); ++i) {
            CHECK(back.instances[i].xi == ds.instances[i].xi);
            CHECK(back.instances[i].signal.values == ds.instances[i].signal.values);
        }
        const auto regen = generate_dataset(back.spec);
        for (std::size_t i = 0; i < ds.size(); ++i) CHECK(regen.instances[i].signal.values == ds.instances[i].signal.values);
        fs::remove_all(dir);
    }
}

TEST_CASE("partitions") {
    const auto h = holdout_split(9600, 0.75, 1);
    CHECK(h.train.size() == 7200);
    CHECK(h.test.size() == 2400);
    std::set<std::size_t> all(h.train.begin(), h.train.end());
    all.insert(h.test.begin(), h.test.end());
    CHECK(all.size() == 9600);

    const auto f = kfold_split(100, 5, 2);
    REQUIRE(f.size() == 5);
    std::set<std::size_t> seen;
    for (const auto& fold : f) {
        CHECK(fold.size() == 20);
        for (auto i : fold) CHECK(seen.insert(i).second);
    }
    CHECK(seen.size() == 100);
    CHECK(kfold_split(100, 5, 2) == f);
    const auto uneven = kfold_split(13, 5, 0);
    std::size_t lo = 100, hi = 0;
    for (const auto& fold : uneven) {
        lo = std::min(lo, fold.size());
        hi = std::max(hi, fold.size());
    }
    CHECK(hi - lo <= 1);
    CHECK_THROWS_AS(kfold_split(4, 5, 0), InputError);
    CHECK_THROWS_AS(kfold_split(10, 1, 0), InputError);
    CHECK_THROWS_AS(holdout_split(10, 1.0, 0), InputError);
}
