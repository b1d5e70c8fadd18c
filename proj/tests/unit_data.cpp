#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "dacl/dataset.hpp"
#include "dacl/linalg.hpp"

using namespace dacl;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
    std::string path = (std::filesystem::temp_directory_path() / name).string();
    std::ofstream f(path, std::ios::trunc);
    f << text;
    return path;
}

} // namespace

TEST_CASE("load_csv shapes, labels, and first-appearance mapping") {
    std::string path = write_temp("dacl_csv1.csv", "a,b,y\n1.5,2,cat\n3,4,dog\n5,6,cat\n");
    Dataset ds = load_csv(path, std::string("y"));
    CHECK(ds.n() == 3);
    CHECK(ds.dim() == 2);
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
    CHECK(ds.features(0, 0) == 1.5);

    std::string numeric = write_temp("dacl_csv1b.csv", "a,b,y\n1.5,2,0\n3,4,1\n5,6,0\n");
    Dataset unlabeled = load_csv(numeric, std::nullopt);
    CHECK(unlabeled.dim() == 3);
    CHECK_FALSE(unlabeled.has_labels());
    std::filesystem::remove(path);
    std::filesystem::remove(numeric);
}

TEST_CASE("load_csv distinct error classes") {
    CHECK_THROWS_AS(load_csv("/nonexistent/nope.csv", std::nullopt), IoError);

    std::string bad_cell = write_temp("dacl_csv2.csv", "a,b\n1,2\n3,oops\n");
    try {
        load_csv(bad_cell, std::nullopt);
        CHECK(false);
    } catch (const IoError& e) {
        std::string msg = e.what();
        CHECK(msg.find("row 2") != std::string::npos);
        CHECK(msg.find("column 1") != std::string::npos);
    }
    std::filesystem::remove(bad_cell);

    std::string no_label = write_temp("dacl_csv3.csv", "a,b\n1,2\n");
    try {
        load_csv(no_label, std::string("y"));
        CHECK(false);
    } catch (const IoError& e) {
        CHECK(std::string(e.what()).find("label column") != std::string::npos);
    }
    std::filesystem::remove(no_label);
}

TEST_CASE("save_csv then load_csv round trip") {
    Rng rng(51, 0);
    Dataset ds = gen_two_class_blobs(20, 4, 2.0, rng);
    std::string path = (std::filesystem::temp_directory_path() / "dacl_csv4.csv").string();
    save_csv(ds, path);
    Dataset back = load_csv(path, std::string("label"));
    CHECK(back.n() == ds.n());
    CHECK(back.dim() == ds.dim());
    // first-appearance order: label 0 appears first in the file
    CHECK(back.labels == ds.labels);
    for (std::size_t i = 0; i < ds.features.size(); ++i)
        CHECK(back.features.data()[i] == ds.features.data()[i]);
    std::filesystem::remove(path);
}

TEST_CASE("normalize_minmax values and idempotence") {
    Dataset ds;
    ds.features = Matrix::from_rows({{2, 5}, {4, 5}, {6, 5}});
    Dataset norm = normalize_minmax(ds);
    CHECK(norm.features(0, 0) == 0.0);
    CHECK(norm.features(1, 0) == 0.5);
    CHECK(norm.features(2, 0) == 1.0);
    // constant column maps to zero
    for (std::size_t i = 0; i < 3; ++i) CHECK(norm.features(i, 1) == 0.0);

    Dataset again = normalize_minmax(norm);
    for (std::size_t i = 0; i < 3; ++i) CHECK(again.features(i, 0) == norm.features(i, 0));
}

TEST_CASE("normalize then denormalize recovers inputs") {
    Rng rng(52, 0);
    Dataset ds = gen_two_class_blobs(64, 6, 1.5, rng);
    Dataset norm = normalize_minmax(ds);
    Dataset back = denormalize(norm);
    for (std::size_t i = 0; i < ds.features.size(); ++i)
        CHECK(std::abs(back.features.data()[i] - ds.features.data()[i]) < 1e-12);
}

TEST_CASE("split sizes, determinism, partition") {
    Rng rng(53, 0);
    Dataset ds = gen_two_class_blobs(10, 3, 1.0, rng);
    Rng s1(7, 0), s2(7, 0);
    auto [tr1, te1] = split(ds, 0.2, s1);
    auto [tr2, te2] = split(ds, 0.2, s2);
    CHECK(tr1.n() == 8);
    CHECK(te1.n() == 2);
    CHECK(tr1.features == tr2.features);
    CHECK(te1.features == te2.features);

    // partition: each original row appears exactly once across the split
    std::multiset<double> original, recombined;
    for (std::size_t i = 0; i < ds.n(); ++i) original.insert(ds.features(i, 0));
    for (std::size_t i = 0; i < tr1.n(); ++i) recombined.insert(tr1.features(i, 0));
    for (std::size_t i = 0; i < te1.n(); ++i) recombined.insert(te1.features(i, 0));
    CHECK(original == recombined);

    Rng s3(7, 0);
    CHECK_THROWS_AS(split(ds, 1.5, s3), ContractError);
}

TEST_CASE("gen_lowrank_gaussian rank structure") {
    Rng rng(54, 0);
    Dataset ds = gen_lowrank_gaussian(128, 16, 5, 1.0, rng);
    SymEig eig = sym_eig(second_moment(ds.features));
    CHECK(eig_rank(eig, 1e-10) == 5);

    // column means vanish after centering
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i) mean += ds.features(i, j);
        CHECK(std::abs(mean / static_cast<double>(ds.n())) <= 1e-12);
    }
}

TEST_CASE("gen_lowrank_gaussian rank-1 rows are collinear") {
    Rng rng(55, 0);
    Dataset ds = gen_lowrank_gaussian(64, 8, 1, 1.0, rng);
    std::vector<double> sv = singular_values(ds.features);
    CHECK(sv[1] / sv[0] < 1e-10);
    CHECK_THROWS_AS(gen_lowrank_gaussian(16, 4, 5, 1.0, rng), ContractError);
}

TEST_CASE("gen_lowrank_gaussian full rank when r = d") {
    Rng rng(56, 0);
    Dataset ds = gen_lowrank_gaussian(256, 6, 6, 1.0, rng);
    CHECK(eig_rank(sym_eig(second_moment(ds.features)), 1e-10) == 6);
}

TEST_CASE("gen_two_class_blobs centering and labels") {
    Rng rng(57, 0);
    Dataset ds = gen_two_class_blobs(200, 5, 4.0, rng);
    CHECK(ds.num_classes() == 2);
    for (std::size_t j = 0; j < ds.dim(); ++j) {
        double mean = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i) mean += ds.features(i, j);
        CHECK(std::abs(mean / static_cast<double>(ds.n())) <= 1e-12);
    }
    CHECK_THROWS_AS(gen_two_class_blobs(7, 5, 1.0, rng), ContractError);
}

TEST_CASE("append_noise_dims keeps signal columns") {
    Rng rng(58, 0);
    Dataset ds = gen_two_class_blobs(16, 3, 1.0, rng);
    Dataset wide = append_noise_dims(ds, 5, 0.1, rng);
    CHECK(wide.dim() == 8);
    CHECK(wide.labels == ds.labels);
    for (std::size_t i = 0; i < ds.n(); ++i)
        for (std::size_t j = 0; j < 3; ++j) CHECK(wide.features(i, j) == ds.features(i, j));
}
