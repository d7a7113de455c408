#include <doctest.h>
#include <stdexcept>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adaptlab/merge.hpp"

using namespace adaptlab;

namespace {

ModelParams make_model(std::uint64_t seed) {
  RngStream rng(seed, 0);
  return init_model(7, 5, 4, 2, 0.5, rng);
}

}  // namespace

TEST_CASE("merge with weight one is a bit-identical copy") {
  ModelParams m = make_model(1);
  CHECK(params_equal(linear_merge({m}, {1.0}), m));
}

TEST_CASE("merging a model with itself at half weights is exact") {
  ModelParams m = make_model(2);
  CHECK(params_equal(linear_merge({m, m}, {0.5, 0.5}), m));
}

TEST_CASE("two-model merge matches the elementwise oracle") {
  ModelParams a = make_model(3);
  ModelParams b = make_model(4);
  ModelParams merged = linear_merge({a, b}, {0.25, 0.75});
  std::vector<double> fa, fb;
  for_each_param(static_cast<const ModelParams&>(a), [&](double v) { fa.push_back(v); });
  for_each_param(static_cast<const ModelParams&>(b), [&](double v) { fb.push_back(v); });
  std::size_t i = 0;
  for_each_param(static_cast<const ModelParams&>(merged), [&](double v) {
    double expect = 0.25 * fa[i] + 0.75 * fb[i];
    CHECK(v == expect);
    ++i;
  });
}

TEST_CASE("permutation of (model, weight) pairs is invariant within 1e-12") {
  ModelParams a = make_model(5);
  ModelParams b = make_model(6);
  ModelParams c = make_model(7);
  ModelParams m1 = linear_merge({a, b, c}, {0.2, 0.3, 0.5});
  ModelParams m2 = linear_merge({c, a, b}, {0.5, 0.2, 0.3});
  std::vector<double> f1;
  for_each_param(static_cast<const ModelParams&>(m1), [&](double v) { f1.push_back(v); });
  std::size_t i = 0;
  for_each_param(static_cast<const ModelParams&>(m2), [&](double v) {
    CHECK(std::abs(v - f1[i++]) <= 1e-12);
  });
}

TEST_CASE("merging commutes with linear functionals of the parameters") {
  ModelParams a = make_model(8);
  ModelParams b = make_model(9);
  RngStream rng(10, 0);
  std::vector<double> coeffs;
  for_each_param(static_cast<const ModelParams&>(a),
                 [&](double) { coeffs.push_back(rng.next_gaussian()); });
  auto functional = [&](const ModelParams& p) {
    double acc = 0.0;
    std::size_t i = 0;
    for_each_param(p, [&](double v) { acc += coeffs[i++] * v; });
    return acc;
  };
  ModelParams merged = linear_merge({a, b}, {0.4, 0.6});
  double direct = functional(merged);
  double via = 0.4 * functional(a) + 0.6 * functional(b);
  CHECK(direct == doctest::Approx(via).epsilon(1e-9));
}

TEST_CASE("merge validation names the offense") {
  ModelParams a = make_model(11);
  ModelParams small = [] {
    RngStream rng(12, 0);
    return init_model(7, 5, 4, 1, 0.5, rng);
  }();

  try {
    linear_merge({a, a}, {0.6, 0.6});
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("sum") != std::string::npos);
  }
  try {
    linear_merge({a, small}, {0.5, 0.5});
    FAIL("expected an exception");
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("shape") != std::string::npos);
  }
  CHECK_THROWS_AS(linear_merge({a}, {0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(linear_merge({}, {}), std::invalid_argument);
}

TEST_CASE("merge spec file parsing") {
  namespace fs = std::filesystem;
  std::string path = (fs::temp_directory_path() / "adaptlab_merge_spec.json").string();
  {
    std::ofstream out(path);
    out << R"({"inputs": ["a.bin", "b.bin"], "weights": [0.25, 0.75]})";
  }
  MergeSpec spec = load_merge_spec(path);
  CHECK(spec.inputs == std::vector<std::string>{"a.bin", "b.bin"});
  CHECK(spec.weights == std::vector<double>{0.25, 0.75});
  {
    std::ofstream out(path);
    out << R"({"inputs": ["a.bin"], "weights": [0.5, 0.5]})";
  }
  CHECK_THROWS_AS(load_merge_spec(path), std::runtime_error);
  std::remove(path.c_str());
}
