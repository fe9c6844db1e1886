#pragma once

// Adaptive Dormand-Prince 5(4) integrator for fixed-size autonomous systems.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>

#include "bykov/error.hpp"

namespace bykov {

struct IntegratorSettings {
  double rtol = 1e-9;
  double atol = 1e-9;
  /// First trial step; later calls reuse the last accepted step.
  double h_init = 1e-3;
  double h_min = 1e-14;
  double h_max = 1.0;
  std::size_t max_steps = 100'000'000;
};

template <std::size_t N>
struct IntegrationStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
};

/// Stateful stepper: keeps the last step size and the FSAL derivative so
/// consecutive `advance` calls (e.g. between renormalisations) stay cheap.
template <std::size_t N, class Rhs>
class DormandPrince {
 public:
  using State = std::array<double, N>;

  DormandPrince(Rhs rhs, IntegratorSettings settings) : rhs_(std::move(rhs)), s_(settings), h_(settings.h_init) {}

  const IntegrationStats<N>& stats() const { return stats_; }
  double last_step() const { return h_; }

  /// Advances y from t to t_end, calling observe(t, y) after every accepted
  /// step. Throws IntegrationError when the step size underflows.
  template <class Observer>
  void advance(State& y, double& t, double t_end, Observer&& observe) {
    if (!(t_end >= t)) throw InvalidArgument("integrate: t_end before t");
    if (!have_k1_ || y != y_k1_) {
      k1_ = rhs_(y);
      y_k1_ = y;
      have_k1_ = true;
    }
    while (t < t_end) {
      if (stats_.accepted + stats_.rejected >= s_.max_steps) {
        throw IntegrationError("integrate: step budget exhausted at t = " + std::to_string(t), t);
      }
      double h = std::min({h_, s_.h_max, t_end - t});
      const bool last = h >= t_end - t;
      State y5, k7;
      const double err = trial(y, h, y5, k7);
      if (!std::isfinite(err)) {
        h_ = 0.25 * h;
        ++stats_.rejected;
        if (h_ < s_.h_min) fail(t);
        continue;
      }
      if (err <= 1.0) {
        t = last ? t_end : t + h;
        y = y5;
        k1_ = k7;
        y_k1_ = y;
        ++stats_.accepted;
        observe(t, y);
        const double fac = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
        // A step clipped to hit t_end says nothing about the natural size.
        if (!last || fac < 1.0) h_ = h * fac;
      } else {
        ++stats_.rejected;
        h_ = h * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        if (h_ < s_.h_min) fail(t);
      }
    }
  }

  void advance(State& y, double& t, double t_end) {
    advance(y, t, t_end, [](double, const State&) {});
  }

  /// One fixed step of size h (no error control); for convergence studies.
  State fixed_step(const State& y, double h) {
    State y5, k7;
    k1_ = rhs_(y);
    y_k1_ = y;
    have_k1_ = true;
    trial(y, h, y5, k7);
    return y5;
  }

 private:
  [[noreturn]] void fail(double t) const {
    throw IntegrationError("integrate: step size underflow at t = " + std::to_string(t), t);
  }

  // Returns the scaled error norm; fills the 5th-order solution and f(y5).
  double trial(const State& y, double h, State& y5, State& k7) {
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0,
                     a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0,
                     a64 = 49.0 / 176.0, a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0,
                     b5 = -2187.0 / 6784.0, b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0,
                     e5 = -17253.0 / 339200.0, e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;
    const State& k1 = k1_;
    State tmp;
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * a21 * k1[i];
    const State k2 = rhs_(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
    const State k3 = rhs_(tmp);
    for (std::size_t i = 0; i < N; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    const State k4 = rhs_(tmp);
    for (std::size_t i = 0; i < N; ++i) {
      tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    }
    const State k5 = rhs_(tmp);
    for (std::size_t i = 0; i < N; ++i) {
      tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    }
    const State k6 = rhs_(tmp);
    for (std::size_t i = 0; i < N; ++i) {
      y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    }
    k7 = rhs_(y5);
    double acc = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
      const double e = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
      const double sc = s_.atol + s_.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
      acc += (e / sc) * (e / sc);
    }
    return std::sqrt(acc / static_cast<double>(N));
  }

  Rhs rhs_;
  IntegratorSettings s_;
  double h_;
  IntegrationStats<N> stats_;
  State k1_{};
  State y_k1_{};
  bool have_k1_ = false;
};

}  // namespace bykov
