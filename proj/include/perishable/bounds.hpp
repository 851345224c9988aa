#pragma once

#include <vector>

namespace perishable {

double standard_normal_pdf(double x);
double standard_normal_cdf(double x);
double standard_normal_quantile(double p);

/// E[(s - X)^+] for X ~ N(0, sigma^2), i.e. s*Phi(s/sigma) + sigma*phi(s/sigma).
/// The companion E[(X - s)^+] equals normal_loss(s, sigma) - s.
double normal_loss(double s, double sigma);
double normal_excess(double s, double sigma);

/// Inputs to the analytic bounds: stationary i.i.d. N(0, sigma^2) forecast
/// errors, transformed cost rates, no fixed ordering cost and no yield loss.
struct BoundContext {
  int lead_time = 2;
  int lifetime = 2;
  int horizon = 60;
  double holding = 1.0;
  double lost_sales = 10.0;
  double expiration = 2.0;
  double sigma = 0.0;
  std::vector<double> forecast;  // used by the PIL lower bound only

  double sigma_lead() const;      // std of the error summed over L+1 periods
  double sigma_lifetime() const;  // std of the error summed over m+L periods
};

double out_lb(double s, const BoundContext& ctx);
double out_ub(double s, const BoundContext& ctx);
double pil_lb(double u, const BoundContext& ctx);
double pil_ub(double u, const BoundContext& ctx);

/// Closed-form minimizers: the (b+hL)/(b+(L+1)h) and b/(b+h+w/m) quantiles
/// of the lead-time error.
double out_ub_argmin(const BoundContext& ctx);
double pil_ub_argmin(const BoundContext& ctx);
/// The lower bounds may be non-convex when w < hL, so they are minimized on
/// a dense grid (+-6 sigma_lifetime, step sigma/50, ties to the smaller s).
/// PIL and OUT share the minimizer since they differ by a constant.
double out_lb_argmin(const BoundContext& ctx);
double pil_lb_argmin(const BoundContext& ctx);

enum class PolicyKind { out, pil };

struct SearchInterval {
  int lo = 0;
  int hi = 0;
  bool operator==(const SearchInterval&) const = default;
};

SearchInterval search_interval(PolicyKind kind, const BoundContext& ctx, int margin = 2);

struct BoundsRow {
  double s = 0.0;
  double lb = 0.0;
  double ub = 0.0;
};

struct BoundsReport {
  PolicyKind kind = PolicyKind::out;
  std::vector<BoundsRow> rows;
  double argmin_lb = 0.0;
  double argmin_ub = 0.0;
  SearchInterval interval;
};

/// Bounds tabulated on the integer points of the search interval.
BoundsReport bounds_report(PolicyKind kind, const BoundContext& ctx, int margin = 2);

}  // namespace perishable
