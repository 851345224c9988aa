#include "perishable/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

namespace perishable {

double standard_normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * std::numbers::inv_sqrtpi / std::numbers::sqrt2;
}

double standard_normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double standard_normal_quantile(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::domain_error("quantile probability must lie in (0, 1)");
  static const boost::math::normal_distribution<double> unit;
  return boost::math::quantile(unit, p);
}

double normal_loss(double s, double sigma) {
  if (sigma < 0.0) throw std::invalid_argument("sigma must be >= 0");
  if (sigma == 0.0) return std::max(s, 0.0);
  const double z = s / sigma;
  return s * standard_normal_cdf(z) + sigma * standard_normal_pdf(z);
}

double normal_excess(double s, double sigma) { return normal_loss(s, sigma) - s; }

double BoundContext::sigma_lead() const { return sigma * std::sqrt(lead_time + 1.0); }
double BoundContext::sigma_lifetime() const { return sigma * std::sqrt(static_cast<double>(lifetime + lead_time)); }

namespace {

double lb_per_period(double s, const BoundContext& c) {
  const double sl = c.sigma_lead();
  const double L = c.lead_time;
  return c.holding * normal_loss(s, sl) + c.lost_sales / (L + 1.0) * normal_excess(s, sl) +
         (c.expiration - c.holding * L) / (c.lifetime + L) * normal_loss(s, c.sigma_lifetime());
}

double grid_argmin_lb(const BoundContext& c) {
  if (c.sigma == 0.0) return 0.0;
  const double span = 6.0 * c.sigma_lifetime();
  const double step = c.sigma / 50.0;
  const auto n = static_cast<long>(std::ceil(2.0 * span / step));
  double best_s = -span;
  double best = lb_per_period(best_s, c);
  for (long i = 1; i <= n; ++i) {
    const double s = -span + static_cast<double>(i) * step;
    const double v = lb_per_period(s, c);
    if (v < best) {
      best = v;
      best_s = s;
    }
  }
  return best_s;
}

}  // namespace

double out_lb(double s, const BoundContext& ctx) { return ctx.horizon * lb_per_period(s, ctx); }

double out_ub(double s, const BoundContext& ctx) {
  const double sl = ctx.sigma_lead();
  return ctx.horizon * (ctx.holding * normal_loss(s, sl) +
                        (ctx.lost_sales + ctx.holding * ctx.lead_time) * normal_excess(s, sl));
}

double pil_lb(double u, const BoundContext& ctx) {
  // sum over t of the forecasts d_{t+1..t+m-1}, zero beyond the horizon
  const auto T = static_cast<int>(ctx.forecast.size());
  auto d = [&](int j) { return j >= 1 && j <= T ? ctx.forecast[static_cast<std::size_t>(j - 1)] : 0.0; };
  double forecast_mass = 0.0;
  for (int t = 1; t <= ctx.horizon; ++t) {
    for (int j = t + 1; j <= t + ctx.lifetime - 1; ++j) forecast_mass += d(j);
  }
  const double coef = (ctx.expiration - ctx.holding * ctx.lead_time) / (ctx.lifetime + ctx.lead_time);
  return out_lb(u, ctx) - coef * forecast_mass;
}

double pil_ub(double u, const BoundContext& ctx) {
  const double sl = ctx.sigma_lead();
  return ctx.horizon * ((ctx.holding + ctx.expiration / ctx.lifetime) * normal_loss(u, sl) +
                        ctx.lost_sales * normal_excess(u, sl));
}

double out_ub_argmin(const BoundContext& ctx) {
  const double h = ctx.holding;
  const double b = ctx.lost_sales;
  const double L = ctx.lead_time;
  if (!(b + (L + 1.0) * h > 0.0)) throw std::invalid_argument("b + (L+1)h must be positive");
  if (ctx.sigma == 0.0) return 0.0;
  return ctx.sigma_lead() * standard_normal_quantile((b + h * L) / (b + (L + 1.0) * h));
}

double pil_ub_argmin(const BoundContext& ctx) {
  const double b = ctx.lost_sales;
  const double over = ctx.holding + ctx.expiration / ctx.lifetime;
  if (!(b + over > 0.0)) throw std::invalid_argument("b + h + w/m must be positive");
  if (ctx.sigma == 0.0) return 0.0;
  return ctx.sigma_lead() * standard_normal_quantile(b / (b + over));
}

double out_lb_argmin(const BoundContext& ctx) { return grid_argmin_lb(ctx); }
double pil_lb_argmin(const BoundContext& ctx) { return grid_argmin_lb(ctx); }

SearchInterval search_interval(PolicyKind kind, const BoundContext& ctx, int margin) {
  const double a = kind == PolicyKind::out ? out_lb_argmin(ctx) : pil_lb_argmin(ctx);
  const double b = kind == PolicyKind::out ? out_ub_argmin(ctx) : pil_ub_argmin(ctx);
  SearchInterval iv;
  iv.hi = static_cast<int>(std::ceil(std::max(a, b))) + margin;
  iv.lo = static_cast<int>(std::floor(std::min(a, b))) - margin;
  iv.lo = std::max(iv.lo, -iv.hi);
  return iv;
}

BoundsReport bounds_report(PolicyKind kind, const BoundContext& ctx, int margin) {
  BoundsReport report;
  report.kind = kind;
  report.argmin_lb = kind == PolicyKind::out ? out_lb_argmin(ctx) : pil_lb_argmin(ctx);
  report.argmin_ub = kind == PolicyKind::out ? out_ub_argmin(ctx) : pil_ub_argmin(ctx);
  report.interval = search_interval(kind, ctx, margin);
  for (int s = report.interval.lo; s <= report.interval.hi; ++s) {
    const double x = s;
    if (kind == PolicyKind::out) {
      report.rows.push_back({x, out_lb(x, ctx), out_ub(x, ctx)});
    } else {
      report.rows.push_back({x, pil_lb(x, ctx), pil_ub(x, ctx)});
    }
  }
  return report;
}

}  // namespace perishable
