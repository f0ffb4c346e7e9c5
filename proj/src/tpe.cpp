#include "babblekit/tpe.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/erf.hpp>

#include "babblekit/error.hpp"
#include "babblekit/hash.hpp"

namespace babblekit::tpe {

namespace {

// Components farther than this many sigmas from a query are skipped.
constexpr double kCutoff = 4.5;

// exp(a) for a in [-kCutoff^2 / 2, 0]: table of exp(-k / 64) times a
// degree-6 Taylor polynomial on the remainder in (-1/64, 0]. Relative error
// below 1e-15.
class KernelExp {
 public:
  static constexpr double kStep = 64.0;
  static constexpr int kSize = static_cast<int>(kCutoff * kCutoff * 0.5 * kStep) + 2;

  KernelExp() {
    for (int k = 0; k < kSize; ++k) table_[static_cast<std::size_t>(k)] = std::exp(-k / kStep);
  }

  double operator()(double a) const {
    const int k = static_cast<int>(-a * kStep);  // truncation: r = a + k / 64 in (-1/64, 0]
    const double r = a + k / kStep;
    const double p =
        1.0 + r * (1.0 + r * (0.5 + r * (1.0 / 6 + r * (1.0 / 24 + r * (1.0 / 120 + r * (1.0 / 720))))));
    return table_[static_cast<std::size_t>(k)] * p;
  }

 private:
  std::array<double, kSize> table_{};
};

const KernelExp kernel_exp;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

double normal_quantile(double p) { return -std::numbers::sqrt2 * boost::math::erfc_inv(2.0 * p); }

double standard_normal(Rng& rng) {
  // Box-Muller; one draw per call keeps the stream easy to reason about.
  double u1 = uniform01(rng);
  while (u1 <= 0.0) u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

SearchSpace::SearchSpace(std::vector<Bound> dims) : dims_(std::move(dims)) {
  for (const auto& d : dims_) {
    if (!std::isfinite(d.lower) || !std::isfinite(d.upper) || !(d.lower < d.upper))
      throw ConfigError("search dimension '" + d.name + "' needs finite bounds with lower < upper");
  }
}

bool SearchSpace::contains(std::span<const double> point) const {
  if (point.size() != dims_.size()) return false;
  for (std::size_t i = 0; i < point.size(); ++i) {
    if (!(point[i] >= dims_[i].lower && point[i] <= dims_[i].upper)) return false;
  }
  return true;
}

void ObservationLog::observe(std::vector<double> point, double loss) {
  if (!std::isfinite(loss)) throw Error("observe: loss must be finite");
  if (!space_->contains(point)) throw Error("observe: point outside the search space");
  const std::size_t idx = entries_.size();
  for (std::size_t d = 0; d < point.size(); ++d) {
    auto& col = sorted_[d];
    const std::pair<double, std::size_t> item{point[d], idx};
    col.insert(std::upper_bound(col.begin(), col.end(), item), item);
  }
  entries_.push_back({std::move(point), loss});
}

std::size_t ObservationLog::best_index() const {
  if (entries_.empty()) throw Error("best: empty observation log");
  std::size_t best = 0;
  for (std::size_t i = 1; i < entries_.size(); ++i)
    if (entries_[i].loss < entries_[best].loss) best = i;
  return best;
}

TpeConfig TpeConfig::from_json(const nlohmann::json& doc) {
  TpeConfig c;
  c.n_startup = doc.value("n_startup", c.n_startup);
  c.n_candidates = doc.value("n_candidates", c.n_candidates);
  c.gamma = doc.value("gamma", c.gamma);
  c.max_good = doc.value("max_good", c.max_good);
  c.prior_weight = doc.value("prior_weight", c.prior_weight);
  c.max_rejections = doc.value("max_rejections", c.max_rejections);
  if (c.n_startup < 1 || c.n_candidates < 1) throw ConfigError("tpe: n_startup and n_candidates must be >= 1");
  if (!(c.gamma > 0.0) || c.max_good < 1) throw ConfigError("tpe: gamma and max_good must be positive");
  if (!(c.prior_weight > 0.0)) throw ConfigError("tpe: prior_weight must be positive");
  return c;
}

nlohmann::json TpeConfig::to_json() const {
  return {{"n_startup", n_startup},   {"n_candidates", n_candidates}, {"gamma", gamma},
          {"max_good", max_good},     {"prior_weight", prior_weight}, {"max_rejections", max_rejections}};
}

std::size_t n_good(std::size_t n, const TpeConfig& cfg) {
  const auto g = static_cast<std::size_t>(std::ceil(cfg.gamma * std::sqrt(static_cast<double>(n))));
  return std::min(g, cfg.max_good);
}

ParzenEstimator::ParzenEstimator(std::span<const double> values, double lower, double upper, double prior_weight)
    : lower_(lower), upper_(upper) {
  const double range = upper - lower;
  std::vector<double> copy;
  std::span<const double> sorted = values;
  if (!std::is_sorted(values.begin(), values.end())) {
    copy.assign(values.begin(), values.end());
    std::sort(copy.begin(), copy.end());
    sorted = copy;
  }
  const std::size_t n = sorted.size();
  const std::size_t m = n + 1;
  min_sigma_ = n > 1 ? range / std::min(100.0, static_cast<double>(n)) : range;
  const double total = static_cast<double>(n) + prior_weight;
  const double prior_mu = 0.5 * (lower + upper);
  const auto prior_pos =
      static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), prior_mu) - sorted.begin());

  mu_.resize(m);
  sigma_.resize(m);
  weight_.assign(m, 1.0 / total);
  for (std::size_t i = 0, k = 0; i < n; ++i, ++k) {
    if (k == prior_pos) ++k;
    double gap = 0.0;
    if (i > 0) gap = sorted[i] - sorted[i - 1];
    if (i + 1 < n) gap = std::max(gap, sorted[i + 1] - sorted[i]);
    mu_[k] = sorted[i];
    sigma_[k] = n > 1 ? std::clamp(gap, min_sigma_, range) : range;
  }
  mu_[prior_pos] = prior_mu;
  sigma_[prior_pos] = range;
  weight_[prior_pos] = prior_weight / total;

  // Component density w / (sigma sqrt(2 pi) Z), Z the truncation mass, is
  // stored relative to that of an untruncated minimum-bandwidth component,
  // exp(log_shift_). Minimum-bandwidth components are located by binary
  // search on their means; the few wider ones (the prior among them) are
  // scanned.
  log_shift_ = -std::log(total) - std::log(min_sigma_) - 0.5 * std::log(2.0 * std::numbers::pi);
  narrow_mu_.reserve(m);
  narrow_coef_.reserve(m);
  for (std::size_t k = 0; k < m; ++k) {
    const double a = (lower - mu_[k]) / sigma_[k];
    const double b = (upper - mu_[k]) / sigma_[k];
    // Beyond 9 sigma the tail mass is below double resolution.
    double z = 1.0;
    if (a >= -9.0 && b <= 9.0)
      z = normal_cdf(b) - normal_cdf(a);
    else if (a >= -9.0)
      z = 0.5 * std::erfc(a / std::numbers::sqrt2);
    else if (b <= 9.0)
      z = normal_cdf(b);
    if (k != prior_pos && sigma_[k] == min_sigma_) {
      narrow_mu_.push_back(mu_[k]);
      narrow_coef_.push_back(1.0 / z);
      continue;
    }
    wide_mu_.push_back(mu_[k]);
    wide_inv_sigma_.push_back(1.0 / sigma_[k]);
    wide_coef_.push_back(weight_[k] * total * (min_sigma_ / sigma_[k]) / z);
  }
}

double ParzenEstimator::log_pdf(double x) const {
  if (x < lower_ || x > upper_) return -std::numeric_limits<double>::infinity();
  double wide = 0.0;
  for (std::size_t k = 0; k < wide_mu_.size(); ++k) {
    const double z = (x - wide_mu_[k]) * wide_inv_sigma_[k];
    if (std::abs(z) <= kCutoff) wide += wide_coef_[k] * kernel_exp(-0.5 * z * z);
  }
  double narrow = 0.0;
  if (!narrow_mu_.empty()) {
    const double reach = kCutoff * min_sigma_;
    const double inv = 1.0 / min_sigma_;
    auto k = static_cast<std::size_t>(std::lower_bound(narrow_mu_.begin(), narrow_mu_.end(), x - reach) -
                                      narrow_mu_.begin());
    for (; k < narrow_mu_.size() && narrow_mu_[k] <= x + reach; ++k) {
      const double z = (x - narrow_mu_[k]) * inv;
      narrow += narrow_coef_[k] * kernel_exp(-0.5 * z * z);
    }
  }
  return log_shift_ + std::log(wide + narrow);
}

double ParzenEstimator::sample(Rng& rng, std::size_t max_rejections) const {
  // Linear scan: only the small "good" mixtures are sampled from.
  double u = uniform01(rng);
  std::size_t k = 0;
  for (; k + 1 < weight_.size(); ++k) {
    if (u < weight_[k]) break;
    u -= weight_[k];
  }
  for (std::size_t r = 0; r < max_rejections; ++r) {
    const double x = mu_[k] + sigma_[k] * standard_normal(rng);
    if (x >= lower_ && x <= upper_) return x;
  }
  const double a = normal_cdf((lower_ - mu_[k]) / sigma_[k]);
  const double b = normal_cdf((upper_ - mu_[k]) / sigma_[k]);
  const double p = std::clamp(a + uniform01(rng) * (b - a), 1e-300, 1.0 - 1e-16);
  return std::clamp(mu_[k] + sigma_[k] * normal_quantile(p), lower_, upper_);
}

std::vector<double> suggest(const SearchSpace& space, const ObservationLog& log, const TpeConfig& cfg, Rng& rng) {
  const std::size_t d = space.size();
  std::vector<double> point(d);
  if (log.size() < cfg.n_startup) {
    for (std::size_t i = 0; i < d; ++i) {
      const auto& b = space[i];
      point[i] = std::min(b.upper, b.lower + uniform01(rng) * (b.upper - b.lower));
    }
    return point;
  }

  const auto& entries = log.entries();
  const std::size_t n = entries.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  const std::size_t ng = std::min(n, n_good(n, cfg));
  // Equal losses are ordered by a seeded shuffle so that a loss plateau
  // does not pin the good set to the earliest observations.
  const std::uint64_t salt = rng();
  const auto by_loss = [&](std::size_t a, std::size_t b) {
    if (entries[a].loss != entries[b].loss) return entries[a].loss < entries[b].loss;
    const auto ka = hash_combine(salt, a);
    const auto kb = hash_combine(salt, b);
    return ka < kb || (ka == kb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(ng), order.end(), by_loss);
  std::vector<char> is_good(n, 0);
  for (std::size_t j = 0; j < ng; ++j) is_good[order[j]] = 1;

  std::vector<ParzenEstimator> good;
  std::vector<ParzenEstimator> bad;
  good.reserve(d);
  bad.reserve(d);
  std::vector<double> gv;
  std::vector<double> bv;
  gv.reserve(ng);
  bv.reserve(n - ng);
  for (std::size_t i = 0; i < d; ++i) {
    gv.clear();
    bv.clear();
    for (const auto& [value, idx] : log.sorted(i)) (is_good[idx] ? gv : bv).push_back(value);
    good.emplace_back(gv, space[i].lower, space[i].upper, cfg.prior_weight);
    bad.emplace_back(bv, space[i].lower, space[i].upper, cfg.prior_weight);
  }

  double best_score = -std::numeric_limits<double>::infinity();
  std::vector<double> cand(d);
  bool have = false;
  for (std::size_t c = 0; c < cfg.n_candidates; ++c) {
    double score = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      cand[i] = good[i].sample(rng, cfg.max_rejections);
      score += good[i].log_pdf(cand[i]) - bad[i].log_pdf(cand[i]);
    }
    if (!have || score > best_score) {
      best_score = score;
      point = cand;
      have = true;
    }
  }
  return point;
}

Optimizer::Optimizer(SearchSpace space, TpeConfig cfg, std::uint64_t seed)
    : space_(std::move(space)), cfg_(cfg), rng_(seed), log_(space_) {}

}  // namespace babblekit::tpe
