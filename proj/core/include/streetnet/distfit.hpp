#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace streetnet::distfit {

enum class Family {
  Lognormal,
  Gumbel,
  Gamma,
  ExponentiatedWeibull,
  Frechet,
  PowerLaw,
  Uniform,
  Exponential,
};

inline constexpr std::array<Family, 8> kAllFamilies = {
    Family::Lognormal, Family::Gumbel,   Family::Gamma,   Family::ExponentiatedWeibull,
    Family::Frechet,   Family::PowerLaw, Family::Uniform, Family::Exponential};

std::string_view to_string(Family f) noexcept;
std::optional<Family> family_from_string(std::string_view name) noexcept;

/// Free parameters counted by AIC: exponential and power law 1, exponentiated Weibull 3,
/// all others 2.
int parameter_count(Family f) noexcept;

/// 2k - 2 lnL
double aic(int k, double log_likelihood) noexcept;

/// Fitted parameters by family:
///   lognormal {mu, sigma}            gumbel {loc, scale}        gamma {shape, scale}
///   exponentiated_weibull {a, c, scale}  frechet {shape, scale}  power_law {alpha, xmin}
///   uniform {lower, upper}           exponential {rate}
/// Shape/scale families have their location fixed at 0. Power-law xmin is the sample
/// minimum and is not counted as a free parameter.
using Params = std::map<std::string, double>;

struct FitResult {
  Family family = Family::Exponential;
  Params params;
  double log_likelihood = 0.0;
  int k = 0;
  double aic = 0.0;
  bool converged = false;
};

/// Log-likelihood of the samples under a family with the given parameters; -inf when a sample
/// lies outside the support or a parameter is invalid.
double log_likelihood(Family f, const Params& params, std::span<const double> samples);

/// Maximum-likelihood fit. Exponential, uniform, lognormal and power law are closed form;
/// gamma, Gumbel, Frechet and exponentiated Weibull use Nelder-Mead on the log-likelihood
/// (relative tolerance 1e-8) from three moment-based starts. A fit whose starts disagree by
/// more than 1e-3 relative log-likelihood, or whose likelihood is not finite, comes back with
/// converged = false and the best values found.
/// Throws InsufficientSamples below 30 samples, DegenerateInput for a non-positive sample.
FitResult fit_family(std::span<const double> samples, Family f);

/// Fits every family and ranks converged fits by AIC, then k, then family name.
/// Throws NonConvergence if no family converged.
std::vector<FitResult> best_fit(std::span<const double> samples,
                                std::span<const Family> families = kAllFamilies);

/// Orders fits by AIC, then parameter count, then family name.
void rank_fits(std::vector<FitResult>& fits);

struct StatsSummary {
  double mu = 0.0;
  double sigma = 0.0;  // population standard deviation
  double min = 0.0;
  double median = 0.0;
  double max = 0.0;
  double dispersion = 0.0;  // sigma^2 / mu; NaN when mu <= 0
  std::size_t count = 0;
};

/// sigma^2 / mu, or NaN when mu is not positive.
double dispersion_index(double mu, double sigma) noexcept;

/// Throws EmptyInput for an empty list.
StatsSummary summarize(std::span<const double> values);

struct RegressionResult {
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

/// Ordinary least squares of y on x. Throws DegenerateInput for mismatched lengths, fewer
/// than three points, or constant x.
RegressionResult linear_regression(std::span<const double> x, std::span<const double> y);

}  // namespace streetnet::distfit
