#include "babblekit/benchmark.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "babblekit/error.hpp"

namespace babblekit::bench {

std::vector<TestFunction> standard_functions() {
  using std::numbers::pi;
  return {
      {"sphere", -5.0, 5.0,
       [](std::span<const double> x) {
         double s = 0.0;
         for (double v : x) s += v * v;
         return s;
       }},
      {"rosenbrock", -2.048, 2.048,
       [](std::span<const double> x) {
         double s = 0.0;
         for (std::size_t i = 0; i + 1 < x.size(); ++i) {
           const double a = x[i + 1] - x[i] * x[i];
           const double b = 1.0 - x[i];
           s += 100.0 * a * a + b * b;
         }
         return s;
       }},
      {"rastrigin", -5.12, 5.12,
       [](std::span<const double> x) {
         double s = 10.0 * static_cast<double>(x.size());
         for (double v : x) s += v * v - 10.0 * std::cos(2.0 * pi * v);
         return s;
       }},
      {"ackley", -32.768, 32.768,
       [](std::span<const double> x) {
         const double n = static_cast<double>(x.size());
         double sq = 0.0;
         double cs = 0.0;
         for (double v : x) {
           sq += v * v;
           cs += std::cos(2.0 * pi * v);
         }
         return -20.0 * std::exp(-0.2 * std::sqrt(sq / n)) - std::exp(cs / n) + 20.0 + std::numbers::e;
       }},
  };
}

const TestFunction& find_function(const std::vector<TestFunction>& fns, const std::string& name) {
  for (const auto& f : fns)
    if (f.name == name) return f;
  throw ConfigError("unknown benchmark function '" + name + "'");
}

tpe::SearchSpace box(const TestFunction& fn, std::size_t dims) {
  std::vector<tpe::Bound> bounds;
  for (std::size_t i = 0; i < dims; ++i) bounds.push_back({"x" + std::to_string(i), fn.lower, fn.upper});
  return tpe::SearchSpace(std::move(bounds));
}

double tpe_best(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::uint64_t seed,
                const tpe::TpeConfig& cfg) {
  tpe::Optimizer opt(box(fn, dims), cfg, seed);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evaluations; ++i) {
    auto x = opt.ask();
    const double y = fn.f(x);
    best = std::min(best, y);
    opt.tell(std::move(x), y);
  }
  return best;
}

double random_best(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::uint64_t seed) {
  tpe::Rng rng(seed);
  std::vector<double> x(dims);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < evaluations; ++i) {
    for (auto& v : x) v = std::min(fn.upper, fn.lower + tpe::uniform01(rng) * (fn.upper - fn.lower));
    best = std::min(best, fn.f(x));
  }
  return best;
}

double median(std::vector<double> values) {
  if (values.empty()) throw Error("median of an empty sample");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

Comparison compare(const TestFunction& fn, std::size_t dims, std::size_t evaluations, std::size_t seeds,
                   std::uint64_t base_seed, const tpe::TpeConfig& cfg) {
  Comparison c;
  c.function = fn.name;
  c.dims = dims;
  c.evaluations = evaluations;
  for (std::size_t s = 0; s < seeds; ++s) {
    c.tpe.push_back(tpe_best(fn, dims, evaluations, base_seed + s, cfg));
    c.random.push_back(random_best(fn, dims, evaluations, base_seed + s));
  }
  c.tpe_median = median(c.tpe);
  c.random_median = median(c.random);
  return c;
}

}  // namespace babblekit::bench
