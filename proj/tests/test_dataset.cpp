#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <random>

#include "cgann/dataset.hpp"
#include "cgann/io.hpp"

using namespace cgann;

namespace {

Dataset
make_dataset(std::vector<std::vector<float>> rows, Metric m = Metric::euclidean) {
    Dataset ds;
    ds.metric = m;
    for (const auto& r : rows) {
        ds.append(r);
    }
    return ds;
}

std::filesystem::path
temp_path(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / "cgann_test";
    std::filesystem::create_directories(dir);
    return dir / name;
}

}  // namespace

TEST_CASE("distance matches hand-computed values") {
    std::vector<float> a{0.0f, 0.0f};
    std::vector<float> b{3.0f, 4.0f};
    CHECK(distance(Metric::euclidean, a, b) == Catch::Approx(5.0));

    std::vector<float> c{1.0f, 2.0f};
    std::vector<float> d{3.0f, 4.0f};
    CHECK(distance(Metric::inner_product, c, d) == Catch::Approx(-11.0));

    std::vector<float> e{1.0f, 0.0f};
    CHECK(distance(Metric::angular, e, e) == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("distance rejects malformed input") {
    std::vector<float> a{1.0f, 2.0f};
    std::vector<float> b{1.0f};
    CHECK_THROWS_AS(distance(Metric::euclidean, a, b), std::invalid_argument);

    std::vector<float> zero{0.0f, 0.0f};
    CHECK_THROWS_AS(distance(Metric::angular, a, zero), std::invalid_argument);
}

TEST_CASE("metric identity") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<float> u(-2.0f, 2.0f);
    for (int t = 0; t < 50; ++t) {
        std::vector<float> v(8);
        for (auto& x : v) {
            x = u(rng);
        }
        CHECK(distance(Metric::euclidean, v, v) == Catch::Approx(0.0).margin(1e-12));
        double sq = 0.0;
        for (float x : v) {
            sq += double(x) * double(x);
        }
        CHECK(distance(Metric::inner_product, v, v) == Catch::Approx(-sq).epsilon(1e-9));
        if (sq > 0.0) {
            CHECK(distance(Metric::angular, v, v) == Catch::Approx(0.0).margin(1e-9));
        }
    }
}

TEST_CASE("euclidean symmetry and triangle inequality on random triples") {
    std::mt19937 rng(11);
    std::uniform_real_distribution<float> u(-5.0f, 5.0f);
    for (int t = 0; t < 200; ++t) {
        std::vector<float> a(6), b(6), c(6);
        for (int i = 0; i < 6; ++i) {
            a[i] = u(rng);
            b[i] = u(rng);
            c[i] = u(rng);
        }
        double ab = distance(Metric::euclidean, a, b);
        double ba = distance(Metric::euclidean, b, a);
        double ac = distance(Metric::euclidean, a, c);
        double cb = distance(Metric::euclidean, c, b);
        CHECK(ab == Catch::Approx(ba).epsilon(1e-5));
        CHECK(ab <= (ac + cb) * (1.0 + 1e-5));
    }
}

TEST_CASE("dataset_abs_mean") {
    CHECK(dataset_abs_mean(make_dataset({{1, -1}, {3, -3}})) == Catch::Approx(2.0));
    CHECK(dataset_abs_mean(make_dataset({{0, 0}})) == Catch::Approx(0.0));
    CHECK(dataset_abs_mean(make_dataset({{2}})) == Catch::Approx(2.0));
}

TEST_CASE("noisy query generation") {
    auto ds = make_dataset({{1, 1}, {-1, -1}});  // eta = 1

    SECTION("zero noise copies the base points") {
        auto qs = generate_noisy_queries(ds, 0.0, 3, 99);
        REQUIRE(qs.size() == 6);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            auto base = ds[i / 3];
            CHECK(qs[i][0] == base[0]);
            CHECK(qs[i][1] == base[1]);
        }
    }

    SECTION("noise support is bounded by scale times eta") {
        auto qs = generate_noisy_queries(ds, 0.5, 50, 123);
        for (std::size_t i = 0; i < qs.size(); ++i) {
            auto base = ds[i / 50];
            for (std::size_t j = 0; j < 2; ++j) {
                CHECK(std::fabs(double(qs[i][j]) - double(base[j])) <= 0.5 + 1e-6);
            }
        }
    }

    SECTION("same seed reproduces the same stream") {
        auto q1 = generate_noisy_queries(ds, 0.3, 4, 2024);
        auto q2 = generate_noisy_queries(ds, 0.3, 4, 2024);
        CHECK(q1 == q2);
        auto q3 = generate_noisy_queries(ds, 0.3, 4, 2025);
        CHECK(q1 != q3);
    }
}

TEST_CASE("medoid picks the point nearest the coordinate mean") {
    auto ds = make_dataset({{0, 0}, {10, 10}, {4, 4}, {6, 6}});  // mean (5,5)
    auto m = medoid(ds);
    CHECK((m == 2 || m == 3));
    CHECK(m == 2);  // ties by smaller id: (4,4) and (6,6) equidistant from (5,5)
}

TEST_CASE("fvecs round-trip is bit exact") {
    std::mt19937 rng(3);
    std::uniform_real_distribution<float> u(-100.0f, 100.0f);
    std::vector<std::vector<float>> rows(37, std::vector<float>(9));
    for (auto& r : rows) {
        for (auto& x : r) {
            x = u(rng);
        }
    }
    auto path = temp_path("roundtrip.fvecs");
    write_fvecs(path.string(), rows);
    auto back = read_fvecs(path.string());
    REQUIRE(back.size() == rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        REQUIRE(back[i].size() == rows[i].size());
        for (std::size_t j = 0; j < rows[i].size(); ++j) {
            CHECK(std::memcmp(&back[i][j], &rows[i][j], sizeof(float)) == 0);
        }
    }
}

TEST_CASE("fvecs single record parses per format definition") {
    auto path = temp_path("single.fvecs");
    {
        std::ofstream f(path, std::ios::binary);
        std::int32_t d = 2;
        float v0 = 1.0f, v1 = 2.0f;
        f.write(reinterpret_cast<char*>(&d), 4);
        f.write(reinterpret_cast<char*>(&v0), 4);
        f.write(reinterpret_cast<char*>(&v1), 4);
    }
    Dataset ds = load_vectors(path.string(), FileFormat::fvecs, Metric::euclidean);
    REQUIRE(ds.size() == 1);
    REQUIRE(ds.dim == 2);
    CHECK(ds[0][0] == 1.0f);
    CHECK(ds[0][1] == 2.0f);
}

TEST_CASE("ingestion rejects inconsistent and truncated records") {
    SECTION("dimension change mid-file") {
        auto path = temp_path("mixed.fvecs");
        {
            std::ofstream f(path, std::ios::binary);
            std::int32_t d4 = 4, d5 = 5;
            float zero = 0.0f;
            f.write(reinterpret_cast<char*>(&d4), 4);
            for (int i = 0; i < 4; ++i) f.write(reinterpret_cast<char*>(&zero), 4);
            f.write(reinterpret_cast<char*>(&d5), 4);
            for (int i = 0; i < 5; ++i) f.write(reinterpret_cast<char*>(&zero), 4);
        }
        CHECK_THROWS_WITH(read_fvecs(path.string()),
                          Catch::Matchers::ContainsSubstring("record 1") &&
                              Catch::Matchers::ContainsSubstring("byte 20"));
    }

    SECTION("truncated payload reports the byte offset") {
        auto path = temp_path("short.fvecs");
        {
            std::ofstream f(path, std::ios::binary);
            std::int32_t d = 3;
            float v = 1.5f;
            f.write(reinterpret_cast<char*>(&d), 4);
            f.write(reinterpret_cast<char*>(&v), 4);  // 2 of 3 components missing
        }
        CHECK_THROWS_WITH(read_fvecs(path.string()),
                          Catch::Matchers::ContainsSubstring("truncated") &&
                              Catch::Matchers::ContainsSubstring("byte 4"));
    }

    SECTION("non-positive dimension") {
        auto path = temp_path("zerod.fvecs");
        {
            std::ofstream f(path, std::ios::binary);
            std::int32_t d = 0;
            f.write(reinterpret_cast<char*>(&d), 4);
        }
        CHECK_THROWS_AS(read_fvecs(path.string()), DataError);
    }
}

TEST_CASE("csv ingestion") {
    auto path = temp_path("simple.csv");
    {
        std::ofstream f(path);
        f << "1.0,2.0\n3.0,4.0\n";
    }
    Dataset ds = load_vectors(path.string(), FileFormat::csv, Metric::euclidean);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.dim == 2);
    CHECK(ds[1][0] == 3.0f);

    auto bad = temp_path("bad.csv");
    {
        std::ofstream f(bad);
        f << "1.0,2.0\n3.0,oops\n";
    }
    CHECK_THROWS_WITH(read_csv(bad.string()), Catch::Matchers::ContainsSubstring(":2"));
}

TEST_CASE("angular datasets reject zero vectors") {
    auto path = temp_path("zero.csv");
    {
        std::ofstream f(path);
        f << "1.0,0.0\n0.0,0.0\n";
    }
    CHECK_THROWS_AS(load_vectors(path.string(), FileFormat::csv, Metric::angular), DataError);
    CHECK_NOTHROW(load_vectors(path.string(), FileFormat::csv, Metric::euclidean));
}

TEST_CASE("ivecs loads as integral vectors") {
    auto path = temp_path("ids.ivecs");
    write_ivecs(path.string(), {{1, 2, 3}, {4, 5, 6}});
    auto rows = read_ivecs(path.string());
    REQUIRE(rows.size() == 2);
    CHECK(rows[1][2] == 6);
    Dataset ds = load_vectors(path.string(), FileFormat::ivecs, Metric::euclidean);
    CHECK(ds[0][2] == 3.0f);
}
