#include <gtest/gtest.h>

#include <cmath>
#include <functional>

#include "oracles.hpp"
#include "perishable/bounds.hpp"

using namespace perishable;

namespace {

BoundContext scenario_one(int m, double b, double w) {
  BoundContext c;
  c.lead_time = 2;
  c.lifetime = m;
  c.horizon = 60;
  c.holding = 1;
  c.lost_sales = b;
  c.expiration = w;
  c.sigma = 1.6;
  c.forecast.assign(60, 32.0 / 3.0);
  return c;
}

double ub_oracle(double s, const BoundContext& c, int n = 20000) {
  const double sl = c.sigma * std::sqrt(c.lead_time + 1.0);
  const double below = oracle::loss_by_quadrature(s, sl, n);
  const double above = below - s;
  return c.horizon * (c.holding * below + (c.lost_sales + c.holding * c.lead_time) * above);
}

double lb_oracle(double s, const BoundContext& c, int n = 20000) {
  const double L = c.lead_time;
  const double sl = c.sigma * std::sqrt(L + 1.0);
  const double sm = c.sigma * std::sqrt(c.lifetime + L);
  const double below = oracle::loss_by_quadrature(s, sl, n);
  return c.horizon * (c.holding * below + c.lost_sales / (L + 1.0) * (below - s) +
                      (c.expiration - c.holding * L) / (c.lifetime + L) * oracle::loss_by_quadrature(s, sm, n));
}

// coarse grid, then a fine grid around the coarse winner
double grid_argmin(const std::function<double(double)>& f) {
  const double coarse = oracle::argmin_on_grid(f, -5, 15, 1e-2);
  return oracle::argmin_on_grid(f, coarse - 0.02, coarse + 0.02, 1e-4);
}

}  // namespace

TEST(Normal, QuantileMatchesBisection) {
  EXPECT_NEAR(standard_normal_quantile(0.99), 2.326348, 1e-6);
  for (double p : {0.01, 0.2, 0.5, 0.9, 0.99, 0.999}) {
    EXPECT_NEAR(standard_normal_quantile(p), oracle::quantile_by_bisection(p), 1e-7) << p;
  }
  EXPECT_THROW(standard_normal_quantile(1.0), std::domain_error);
}

TEST(Normal, LossMatchesQuadrature) {
  for (double sigma : {0.5, 1.6, 7.0}) {
    for (double s : {-10.0, -2.0, 0.0, 1.3, 4.0, 12.0}) {
      EXPECT_NEAR(normal_loss(s, sigma), oracle::loss_by_quadrature(s, sigma), 1e-9) << s << " " << sigma;
    }
  }
  EXPECT_EQ(normal_loss(3, 0), 3);
  EXPECT_EQ(normal_loss(-3, 0), 0);
  EXPECT_EQ(normal_excess(-3, 0), 3);
}

TEST(Bounds, ValuesMatchQuadrature) {
  for (int m : {2, 3, 4}) {
    for (double w : {2.0, 4.0}) {
      const auto c = scenario_one(m, 50, w);
      for (double s = -4; s <= 10; s += 1.5) {
        EXPECT_NEAR(out_ub(s, c), ub_oracle(s, c), 1e-6);
        EXPECT_NEAR(out_lb(s, c), lb_oracle(s, c), 1e-6);
      }
    }
  }
}

TEST(Bounds, PilLowerBoundIsShiftedOutBound) {
  const auto c = scenario_one(3, 100, 4);
  const double shift = out_lb(0, c) - pil_lb(0, c);
  for (double u = -3; u <= 9; u += 0.7) EXPECT_NEAR(out_lb(u, c) - pil_lb(u, c), shift, 1e-9);
  // sum over t of d_{t+1} + d_{t+2}, zero past the horizon
  double mass = 0;
  for (int t = 1; t <= 60; ++t)
    for (int j = t + 1; j <= t + 2; ++j) mass += j <= 60 ? 32.0 / 3.0 : 0.0;
  EXPECT_NEAR(shift, (4.0 - 2.0) / 5.0 * mass, 1e-9);
}

TEST(Bounds, ClosedFormArgminsMatchGridSearch) {
  for (int m : {2, 3, 4}) {
    for (double b : {10.0, 50.0, 100.0, 1000.0}) {
      for (double w : {2.0, 4.0}) {
        const auto c = scenario_one(m, b, w);
        const double out_grid = grid_argmin([&](double s) { return ub_oracle(s, c, 2000); });
        EXPECT_NEAR(out_ub_argmin(c), out_grid, 2e-3);
        const double over = c.holding + w / m;
        const double sl = c.sigma * std::sqrt(3.0);
        const double pil_grid = grid_argmin([&](double u) {
          const double below = oracle::loss_by_quadrature(u, sl, 2000);
          return over * below + b * (below - u);
        });
        EXPECT_NEAR(pil_ub_argmin(c), pil_grid, 2e-3);
      }
    }
  }
}

TEST(Bounds, LowerBoundArgminIsGridOptimal) {
  for (int m : {2, 3, 4}) {
    for (double b : {10.0, 1000.0}) {
      for (double w : {2.0, 4.0}) {
        const auto c = scenario_one(m, b, w);
        const double grid = grid_argmin([&](double s) { return lb_oracle(s, c, 2000); });
        // the library grid is coarser (sigma / 50), so compare the objective
        EXPECT_LE(lb_oracle(out_lb_argmin(c), c), lb_oracle(grid, c) + 1e-3 * c.horizon);
        EXPECT_NEAR(out_lb_argmin(c), grid, c.sigma / 50 + 2e-3);
        EXPECT_EQ(pil_lb_argmin(c), out_lb_argmin(c));
      }
    }
  }
}

TEST(Bounds, UpperBoundsConvex) {
  const auto c = scenario_one(3, 100, 2);
  for (double s = -6; s <= 12; s += 0.25) {
    EXPECT_GE(out_ub(s - 0.25, c) + out_ub(s + 0.25, c) - 2 * out_ub(s, c), -1e-9);
    EXPECT_GE(pil_ub(s - 0.25, c) + pil_ub(s + 0.25, c) - 2 * pil_ub(s, c), -1e-9);
  }
}

TEST(Bounds, ArgminScalesWithSigma) {
  auto c = scenario_one(2, 100, 2);
  const double base = out_ub_argmin(c);
  c.sigma *= 3;
  EXPECT_NEAR(out_ub_argmin(c), 3 * base, 1e-9);
}

TEST(Bounds, ZeroNoise) {
  auto c = scenario_one(3, 100, 2);
  c.sigma = 0;
  EXPECT_EQ(out_ub_argmin(c), 0);
  EXPECT_EQ(pil_ub_argmin(c), 0);
  EXPECT_EQ(out_lb_argmin(c), 0);
  EXPECT_EQ(search_interval(PolicyKind::out, c), (SearchInterval{-2, 2}));
  EXPECT_EQ(search_interval(PolicyKind::pil, c, 0), (SearchInterval{0, 0}));
}

TEST(Bounds, IntervalBracketsBothArgmins) {
  for (int m : {2, 3, 4}) {
    for (double b : {10.0, 50.0, 100.0, 1000.0}) {
      const auto c = scenario_one(m, b, 4);
      for (auto kind : {PolicyKind::out, PolicyKind::pil}) {
        const auto iv = search_interval(kind, c);
        const double a = kind == PolicyKind::out ? out_lb_argmin(c) : pil_lb_argmin(c);
        const double u = kind == PolicyKind::out ? out_ub_argmin(c) : pil_ub_argmin(c);
        EXPECT_LE(iv.lo, std::floor(std::min(a, u)));
        EXPECT_GE(iv.hi, std::ceil(std::max(a, u)));
        EXPECT_GE(iv.lo, -iv.hi);
        const auto report = bounds_report(kind, c);
        EXPECT_EQ(report.rows.size(), static_cast<std::size_t>(iv.hi - iv.lo + 1));
        EXPECT_EQ(report.rows.front().s, iv.lo);
      }
    }
  }
}
