// Copyright 2026 The Spinebound Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef SPINEBOUND_SECOND_ORDER_DUAL_HPP_
#define SPINEBOUND_SECOND_ORDER_DUAL_HPP_

#include <cmath>

#include <Eigen/Core>

namespace spinebound {

// Truncated Taylor number f(s) = v + d s + dd s^2 / 2 along one direction.
// Evaluating kinematics at q + s * qdot yields positions (v), velocities (d)
// and the velocity-product accelerations Jdot * qdot (dd).
struct SecondOrderDual {
  double v = 0.0;
  double d = 0.0;
  double dd = 0.0;

  SecondOrderDual() = default;
  SecondOrderDual(double value) : v(value) {}  // NOLINT: implicit constant
  SecondOrderDual(double value, double first, double second)
      : v(value), d(first), dd(second) {}

  SecondOrderDual& operator+=(const SecondOrderDual& o) {
    v += o.v;
    d += o.d;
    dd += o.dd;
    return *this;
  }
  SecondOrderDual& operator-=(const SecondOrderDual& o) {
    v -= o.v;
    d -= o.d;
    dd -= o.dd;
    return *this;
  }
  SecondOrderDual& operator*=(const SecondOrderDual& o) {
    *this = *this * o;
    return *this;
  }
  SecondOrderDual& operator/=(const SecondOrderDual& o) {
    *this = *this / o;
    return *this;
  }

  friend SecondOrderDual operator+(SecondOrderDual a,
                                   const SecondOrderDual& b) {
    return a += b;
  }
  friend SecondOrderDual operator-(SecondOrderDual a,
                                   const SecondOrderDual& b) {
    return a -= b;
  }
  friend SecondOrderDual operator-(const SecondOrderDual& a) {
    return {-a.v, -a.d, -a.dd};
  }
  friend SecondOrderDual operator*(const SecondOrderDual& a,
                                   const SecondOrderDual& b) {
    return {a.v * b.v, a.d * b.v + a.v * b.d,
            a.dd * b.v + 2.0 * a.d * b.d + a.v * b.dd};
  }
  friend SecondOrderDual operator/(const SecondOrderDual& a,
                                   const SecondOrderDual& b) {
    const double v = a.v / b.v;
    const double d = (a.d - v * b.d) / b.v;
    const double dd = (a.dd - 2.0 * d * b.d - v * b.dd) / b.v;
    return {v, d, dd};
  }
  friend bool operator<(const SecondOrderDual& a, const SecondOrderDual& b) {
    return a.v < b.v;
  }
  friend bool operator>(const SecondOrderDual& a, const SecondOrderDual& b) {
    return a.v > b.v;
  }
  friend bool operator==(const SecondOrderDual& a, const SecondOrderDual& b) {
    return a.v == b.v && a.d == b.d && a.dd == b.dd;
  }
  friend bool operator!=(const SecondOrderDual& a, const SecondOrderDual& b) {
    return !(a == b);
  }
};

inline SecondOrderDual sin(const SecondOrderDual& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {s, c * a.d, c * a.dd - s * a.d * a.d};
}

inline SecondOrderDual cos(const SecondOrderDual& a) {
  const double s = std::sin(a.v);
  const double c = std::cos(a.v);
  return {c, -s * a.d, -s * a.dd - c * a.d * a.d};
}

inline SecondOrderDual sqrt(const SecondOrderDual& a) {
  const double r = std::sqrt(a.v);
  const double d = a.d / (2.0 * r);
  return {r, d, (a.dd - 2.0 * d * d) / (2.0 * r)};
}

inline SecondOrderDual atan2(const SecondOrderDual& y,
                             const SecondOrderDual& x) {
  const double m = x.v * x.v + y.v * y.v;
  const double n = x.v * y.d - y.v * x.d;
  const double dn = x.v * y.dd - y.v * x.dd;
  const double dm = 2.0 * (x.v * x.d + y.v * y.d);
  return {std::atan2(y.v, x.v), n / m, (dn * m - n * dm) / (m * m)};
}

inline SecondOrderDual abs(const SecondOrderDual& a) {
  return a.v < 0 ? -a : a;
}

}  // namespace spinebound

namespace Eigen {

template <>
struct NumTraits<spinebound::SecondOrderDual> : NumTraits<double> {
  using Real = spinebound::SecondOrderDual;
  using NonInteger = spinebound::SecondOrderDual;
  using Nested = spinebound::SecondOrderDual;
  using Literal = spinebound::SecondOrderDual;
  enum {
    IsComplex = 0,
    IsInteger = 0,
    IsSigned = 1,
    RequireInitialization = 1,
    ReadCost = 3,
    AddCost = 3,
    MulCost = 8
  };
};

}  // namespace Eigen

#endif  // SPINEBOUND_SECOND_ORDER_DUAL_HPP_
