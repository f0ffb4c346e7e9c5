#pragma once

// Tree-structured Parzen Estimator over a flat box of continuous dimensions.
// Univariate truncated-Gaussian mixtures per dimension; candidates drawn from
// the "good" density and ranked by the log density ratio.

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace babblekit::tpe {

struct Bound {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

class SearchSpace {
 public:
  SearchSpace() = default;
  explicit SearchSpace(std::vector<Bound> dims);

  std::size_t size() const noexcept { return dims_.size(); }
  const std::vector<Bound>& dims() const noexcept { return dims_; }
  const Bound& operator[](std::size_t i) const { return dims_[i]; }
  bool contains(std::span<const double> point) const;

 private:
  std::vector<Bound> dims_;
};

struct Observation {
  std::vector<double> point;
  double loss = 0.0;
};

class ObservationLog {
 public:
  explicit ObservationLog(const SearchSpace& space) : space_(&space), sorted_(space.size()) {}

  // Throws Error on a non-finite loss or an out-of-bounds point.
  void observe(std::vector<double> point, double loss);

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<Observation>& entries() const noexcept { return entries_; }
  const SearchSpace& space() const noexcept { return *space_; }
  // Per dimension: (value, entry index) ordered by value.
  const std::vector<std::pair<double, std::size_t>>& sorted(std::size_t dim) const { return sorted_[dim]; }

  // Minimal loss; ties resolve to the earliest entry. Throws on empty log.
  std::size_t best_index() const;
  const Observation& best() const { return entries_[best_index()]; }

 private:
  const SearchSpace* space_;
  std::vector<Observation> entries_;
  std::vector<std::vector<std::pair<double, std::size_t>>> sorted_;
};

struct TpeConfig {
  std::size_t n_startup = 64;
  std::size_t n_candidates = 24;
  double gamma = 0.25;       // n_good = min(ceil(gamma * sqrt(n)), max_good)
  std::size_t max_good = 25;
  double prior_weight = 1.0;
  std::size_t max_rejections = 100;

  static TpeConfig from_json(const nlohmann::json& doc);
  nlohmann::json to_json() const;
};

std::size_t n_good(std::size_t n, const TpeConfig& cfg);

using Rng = std::mt19937_64;

double uniform01(Rng& rng);

// One-dimensional mixture of truncated Gaussians on [lower, upper] built from
// observed values plus a broad prior component at the midpoint.
class ParzenEstimator {
 public:
  ParzenEstimator(std::span<const double> values, double lower, double upper, double prior_weight = 1.0);

  double log_pdf(double x) const;
  double sample(Rng& rng, std::size_t max_rejections = 100) const;

  std::size_t components() const noexcept { return mu_.size(); }
  const std::vector<double>& means() const noexcept { return mu_; }
  const std::vector<double>& sigmas() const noexcept { return sigma_; }
  const std::vector<double>& weights() const noexcept { return weight_; }

 private:
  double lower_;
  double upper_;
  // All components sorted by mean (prior included).
  std::vector<double> mu_;
  std::vector<double> sigma_;
  std::vector<double> weight_;
  double min_sigma_ = 0.0;
  // Minimum-bandwidth components, sorted by mean.
  std::vector<double> narrow_mu_;
  std::vector<double> narrow_coef_;
  // Everything else, including the prior.
  std::vector<double> wide_mu_;
  std::vector<double> wide_inv_sigma_;
  std::vector<double> wide_coef_;
  double log_shift_ = 0.0;
};

// Next point to evaluate. Uniform until n_startup observations exist.
std::vector<double> suggest(const SearchSpace& space, const ObservationLog& log, const TpeConfig& cfg, Rng& rng);

// Stateful convenience wrapper: one optimizer per search.
class Optimizer {
 public:
  Optimizer(SearchSpace space, TpeConfig cfg, std::uint64_t seed);
  Optimizer(const Optimizer&) = delete;
  Optimizer& operator=(const Optimizer&) = delete;

  std::vector<double> ask() { return suggest(space_, log_, cfg_, rng_); }
  void tell(std::vector<double> point, double loss) { log_.observe(std::move(point), loss); }

  const SearchSpace& space() const noexcept { return space_; }
  const ObservationLog& log() const noexcept { return log_; }

 private:
  SearchSpace space_;
  TpeConfig cfg_;
  Rng rng_;
  ObservationLog log_;
};

}  // namespace babblekit::tpe
