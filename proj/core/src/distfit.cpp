#include "streetnet/distfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "nelder_mead.hpp"
#include "streetnet/error.hpp"

namespace streetnet::distfit {
namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEulerGamma = 0.57721566490153286;
constexpr std::size_t kMinSamples = 30;
constexpr double kStartAgreement = 1e-3;

double mean_of(std::span<const double> xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double pop_sd(std::span<const double> xs, double mean) {
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(xs.size()));
}

double ll_lognormal(double mu, double sigma, std::span<const double> xs) {
  if (!(sigma > 0.0)) return kNegInf;
  const double c = -std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
  double ll = 0.0;
  for (double x : xs) {
    const double lx = std::log(x);
    const double z = (lx - mu) / sigma;
    ll += c - lx - 0.5 * z * z;
  }
  return ll;
}

double ll_gumbel(double loc, double scale, std::span<const double> xs) {
  if (!(scale > 0.0)) return kNegInf;
  double ll = 0.0;
  const double ls = std::log(scale);
  for (double x : xs) {
    const double t = (x - loc) / scale;
    ll += -ls - t - std::exp(-t);
  }
  return ll;
}

double ll_gamma(double shape, double scale, std::span<const double> xs) {
  if (!(shape > 0.0) || !(scale > 0.0)) return kNegInf;
  const double c = -std::lgamma(shape) - shape * std::log(scale);
  double ll = 0.0;
  for (double x : xs) ll += c + (shape - 1.0) * std::log(x) - x / scale;
  return ll;
}

double ll_exponweib(double a, double c, double scale, std::span<const double> xs) {
  if (!(a > 0.0) || !(c > 0.0) || !(scale > 0.0)) return kNegInf;
  const double k = std::log(a) + std::log(c) - std::log(scale);
  double ll = 0.0;
  for (double x : xs) {
    const double lz = std::log(x / scale);
    const double z = std::exp(c * lz);
    const double log_cdf_w = z > 0.5 ? std::log1p(-std::exp(-z)) : std::log(-std::expm1(-z));
    ll += k + (c - 1.0) * lz - z + (a - 1.0) * log_cdf_w;
  }
  return ll;
}

double ll_frechet(double shape, double scale, std::span<const double> xs) {
  if (!(shape > 0.0) || !(scale > 0.0)) return kNegInf;
  const double k = std::log(shape) - std::log(scale);
  double ll = 0.0;
  for (double x : xs) {
    const double lz = std::log(x / scale);
    ll += k - (1.0 + shape) * lz - std::exp(-shape * lz);
  }
  return ll;
}

double ll_power_law(double alpha, double xmin, std::span<const double> xs) {
  if (!(alpha > 1.0) || !(xmin > 0.0)) return kNegInf;
  const double k = std::log(alpha - 1.0) - std::log(xmin);
  double ll = 0.0;
  for (double x : xs) {
    if (x < xmin) return kNegInf;
    ll += k - alpha * std::log(x / xmin);
  }
  return ll;
}

double ll_uniform(double lower, double upper, std::span<const double> xs) {
  if (!(upper > lower)) return kNegInf;
  for (double x : xs) {
    if (x < lower || x > upper) return kNegInf;
  }
  return -static_cast<double>(xs.size()) * std::log(upper - lower);
}

double ll_exponential(double rate, std::span<const double> xs) {
  if (!(rate > 0.0)) return kNegInf;
  double ll = 0.0;
  for (double x : xs) ll += std::log(rate) - rate * x;
  return ll;
}

struct Start {
  std::vector<double> x;  // optimizer coordinates
};

// Runs Nelder-Mead from each start on -lnL/n and checks that the starts agree.
struct NumericFit {
  std::vector<double> x;
  double log_likelihood = kNegInf;
  bool converged = false;
};

NumericFit fit_numeric(const std::function<double(const std::vector<double>&)>& ll,
                       const std::vector<Start>& starts, std::size_t n) {
  const double scale = 1.0 / static_cast<double>(n);
  auto objective = [&](const std::vector<double>& x) { return -ll(x) * scale; };

  NumericFit best;
  std::vector<double> lls;
  bool all_converged = true;
  for (const Start& s : starts) {
    const detail::MinimizeResult r = detail::nelder_mead(objective, s.x, 1e-8);
    const double value = -r.value / scale;
    lls.push_back(value);
    all_converged = all_converged && r.converged && std::isfinite(value);
    if (value > best.log_likelihood || best.x.empty()) {
      best.x = r.x;
      best.log_likelihood = value;
    }
  }
  bool agree = std::isfinite(best.log_likelihood);
  for (double v : lls) {
    if (!std::isfinite(v) ||
        std::abs(v - best.log_likelihood) > kStartAgreement * std::max(1.0, std::abs(best.log_likelihood))) {
      agree = false;
    }
  }
  best.converged = all_converged && agree;
  return best;
}

void check_samples(std::span<const double> samples) {
  if (samples.size() < kMinSamples) {
    throw Error(ErrorCode::InsufficientSamples,
                "distribution fitting needs at least " + std::to_string(kMinSamples) + " samples");
  }
  for (double x : samples) {
    if (!(x > 0.0) || !std::isfinite(x)) {
      throw Error(ErrorCode::DegenerateInput, "samples must be positive and finite");
    }
  }
}

// Moments of log-samples; used to seed several families.
struct LogMoments {
  double mean;
  double sd;
};

LogMoments log_moments(std::span<const double> xs) {
  std::vector<double> logs(xs.size());
  std::transform(xs.begin(), xs.end(), logs.begin(), [](double x) { return std::log(x); });
  const double m = mean_of(logs);
  return {m, std::max(pop_sd(logs, m), 1e-6)};
}

}  // namespace

std::string_view to_string(Family f) noexcept {
  switch (f) {
    case Family::Lognormal: return "lognormal";
    case Family::Gumbel: return "gumbel";
    case Family::Gamma: return "gamma";
    case Family::ExponentiatedWeibull: return "exponentiated_weibull";
    case Family::Frechet: return "frechet";
    case Family::PowerLaw: return "power_law";
    case Family::Uniform: return "uniform";
    case Family::Exponential: return "exponential";
  }
  return "unknown";
}

std::optional<Family> family_from_string(std::string_view name) noexcept {
  for (Family f : kAllFamilies) {
    if (to_string(f) == name) return f;
  }
  return std::nullopt;
}

int parameter_count(Family f) noexcept {
  switch (f) {
    case Family::Exponential:
    case Family::PowerLaw:
      return 1;
    case Family::ExponentiatedWeibull:
      return 3;
    default:
      return 2;
  }
}

double aic(int k, double log_likelihood) noexcept {
  return 2.0 * static_cast<double>(k) - 2.0 * log_likelihood;
}

double log_likelihood(Family f, const Params& p, std::span<const double> xs) {
  auto get = [&](const char* name) {
    auto it = p.find(name);
    return it == p.end() ? std::numeric_limits<double>::quiet_NaN() : it->second;
  };
  switch (f) {
    case Family::Lognormal: return ll_lognormal(get("mu"), get("sigma"), xs);
    case Family::Gumbel: return ll_gumbel(get("loc"), get("scale"), xs);
    case Family::Gamma: return ll_gamma(get("shape"), get("scale"), xs);
    case Family::ExponentiatedWeibull: return ll_exponweib(get("a"), get("c"), get("scale"), xs);
    case Family::Frechet: return ll_frechet(get("shape"), get("scale"), xs);
    case Family::PowerLaw: return ll_power_law(get("alpha"), get("xmin"), xs);
    case Family::Uniform: return ll_uniform(get("lower"), get("upper"), xs);
    case Family::Exponential: return ll_exponential(get("rate"), xs);
  }
  return kNegInf;
}

FitResult fit_family(std::span<const double> xs, Family f) {
  check_samples(xs);
  FitResult r;
  r.family = f;
  r.k = parameter_count(f);
  r.converged = true;

  const double mean = mean_of(xs);
  const double sd = std::max(pop_sd(xs, mean), 1e-12 * mean);
  const auto [xmin_it, xmax_it] = std::minmax_element(xs.begin(), xs.end());
  const double xmin = *xmin_it;
  const double xmax = *xmax_it;

  switch (f) {
    case Family::Exponential:
      r.params = {{"rate", 1.0 / mean}};
      break;
    case Family::Uniform:
      r.params = {{"lower", xmin}, {"upper", xmax}};
      break;
    case Family::Lognormal: {
      const LogMoments lm = log_moments(xs);
      r.params = {{"mu", lm.mean}, {"sigma", lm.sd}};
      break;
    }
    case Family::PowerLaw: {
      double sum_log = 0.0;
      for (double x : xs) sum_log += std::log(x / xmin);
      const double alpha = 1.0 + static_cast<double>(xs.size()) / sum_log;
      r.params = {{"alpha", alpha}, {"xmin", xmin}};
      break;
    }
    case Family::Gamma: {
      const double shape0 = mean * mean / (sd * sd);
      const double scale0 = sd * sd / mean;
      auto ll = [&](const std::vector<double>& v) { return ll_gamma(std::exp(v[0]), std::exp(v[1]), xs); };
      const NumericFit fit = fit_numeric(
          ll,
          {{{std::log(shape0), std::log(scale0)}},
           {{std::log(shape0 * 0.5), std::log(scale0 * 2.0)}},
           {{std::log(shape0 * 2.0), std::log(scale0 * 0.5)}}},
          xs.size());
      r.params = {{"shape", std::exp(fit.x[0])}, {"scale", std::exp(fit.x[1])}};
      r.converged = fit.converged;
      break;
    }
    case Family::Gumbel: {
      const double beta0 = sd * std::sqrt(6.0) / std::numbers::pi;
      const double loc0 = mean - kEulerGamma * beta0;
      auto ll = [&](const std::vector<double>& v) { return ll_gumbel(v[0], std::exp(v[1]), xs); };
      const NumericFit fit = fit_numeric(
          ll,
          {{{loc0, std::log(beta0)}},
           {{loc0 - 0.5 * beta0, std::log(beta0 * 0.5)}},
           {{loc0 + 0.5 * beta0, std::log(beta0 * 2.0)}}},
          xs.size());
      r.params = {{"loc", fit.x[0]}, {"scale", std::exp(fit.x[1])}};
      r.converged = fit.converged;
      break;
    }
    case Family::Frechet: {
      // log X is Gumbel(log scale, 1/shape) when X is Frechet(shape, scale).
      const LogMoments lm = log_moments(xs);
      const double beta = lm.sd * std::sqrt(6.0) / std::numbers::pi;
      const double shape0 = 1.0 / beta;
      const double scale0 = std::exp(lm.mean - kEulerGamma * beta);
      auto ll = [&](const std::vector<double>& v) { return ll_frechet(std::exp(v[0]), std::exp(v[1]), xs); };
      const NumericFit fit = fit_numeric(
          ll,
          {{{std::log(shape0), std::log(scale0)}},
           {{std::log(shape0 * 0.5), std::log(scale0)}},
           {{std::log(shape0 * 2.0), std::log(scale0 * 0.8)}}},
          xs.size());
      r.params = {{"shape", std::exp(fit.x[0])}, {"scale", std::exp(fit.x[1])}};
      r.converged = fit.converged;
      break;
    }
    case Family::ExponentiatedWeibull: {
      // Weibull seed: log X is a minimum-Gumbel with scale 1/c.
      const LogMoments lm = log_moments(xs);
      const double c0 = std::numbers::pi / (lm.sd * std::sqrt(6.0));
      const double scale0 = std::exp(lm.mean + kEulerGamma / c0);
      auto ll = [&](const std::vector<double>& v) {
        return ll_exponweib(std::exp(v[0]), std::exp(v[1]), std::exp(v[2]), xs);
      };
      const NumericFit fit = fit_numeric(
          ll,
          {{{0.0, std::log(c0), std::log(scale0)}},
           {{std::log(2.0), std::log(c0 * 0.7), std::log(scale0 * 0.8)}},
           {{std::log(0.5), std::log(c0 * 1.4), std::log(scale0 * 1.2)}}},
          xs.size());
      r.params = {{"a", std::exp(fit.x[0])}, {"c", std::exp(fit.x[1])}, {"scale", std::exp(fit.x[2])}};
      r.converged = fit.converged;
      break;
    }
  }

  r.log_likelihood = log_likelihood(f, r.params, xs);
  if (!std::isfinite(r.log_likelihood)) r.converged = false;
  r.aic = aic(r.k, r.log_likelihood);
  return r;
}

void rank_fits(std::vector<FitResult>& fits) {
  std::sort(fits.begin(), fits.end(), [](const FitResult& a, const FitResult& b) {
    if (a.aic != b.aic) return a.aic < b.aic;
    if (a.k != b.k) return a.k < b.k;
    return to_string(a.family) < to_string(b.family);
  });
}

std::vector<FitResult> best_fit(std::span<const double> samples, std::span<const Family> families) {
  check_samples(samples);
  std::vector<FitResult> ranked;
  for (Family f : families) {
    FitResult r = fit_family(samples, f);
    if (r.converged && std::isfinite(r.aic)) ranked.push_back(std::move(r));
  }
  if (ranked.empty()) throw Error(ErrorCode::NonConvergence, "no candidate distribution converged");
  rank_fits(ranked);
  return ranked;
}

double dispersion_index(double mu, double sigma) noexcept {
  if (!(mu > 0.0)) return std::numeric_limits<double>::quiet_NaN();
  return sigma * sigma / mu;
}

StatsSummary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::EmptyInput, "cannot summarize an empty list");
  StatsSummary s;
  s.count = values.size();
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  // Sum in sorted order so the result does not depend on input order.
  s.mu = mean_of(sorted);
  s.sigma = pop_sd(sorted, s.mu);
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 == 1 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  s.dispersion = dispersion_index(s.mu, s.sigma);
  return s;
}

RegressionResult linear_regression(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw Error(ErrorCode::DegenerateInput, "x and y lengths differ");
  if (x.size() < 3) throw Error(ErrorCode::DegenerateInput, "regression needs at least 3 points");
  const double mx = mean_of(x);
  const double my = mean_of(y);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::DegenerateInput, "x is constant");
  RegressionResult r;
  r.slope = sxy / sxx;
  r.intercept = my - r.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double e = y[i] - (r.intercept + r.slope * x[i]);
    ss_res += e * e;
  }
  r.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
  return r;
}

}  // namespace streetnet::distfit
