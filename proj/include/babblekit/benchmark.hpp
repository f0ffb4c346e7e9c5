#pragma once

// Optimizer benchmark suite: standard test functions, TPE versus uniform
// random search under the same evaluation budget.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "babblekit/tpe.hpp"

namespace babblekit::bench {

struct TestFunction {
  std::string name;
  double lower = 0.0;  // per-dimension box
  double upper = 0.0;
  std::function<double(std::span<const double>)> f;
};

// sphere, rosenbrock, rastrigin, ackley; all have minimum 0.
std::vector<TestFunction> standard_functions();
const TestFunction& find_function(const std::vector<TestFunction>& fns, const std::string& name);

tpe::SearchSpace box(const TestFunction& fn, std::size_t dims);

// Best loss after `evaluations` evaluations.
double tpe_best(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::uint64_t seed,
                const tpe::TpeConfig& cfg = {});
double random_best(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::uint64_t seed);

struct Comparison {
  std::string function;
  std::size_t dims = 0;
  std::size_t evaluations = 0;
  std::vector<double> tpe;     // per seed
  std::vector<double> random;  // per seed
  double tpe_median = 0.0;
  double random_median = 0.0;
};

// Seeds base_seed, base_seed + 1, ...
Comparison compare(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::size_t seeds,
                   std::uint64_t base_seed, const tpe::TpeConfig& cfg = {});

double median(std::vector<double> values);

}  // namespace babblekit::bench
