#pragma once

#include "irrevkit/comb.hpp"
#include "irrevkit/qcore.hpp"

#include <cmath>

namespace support {

using namespace irrevkit;

inline const Space kS{{"S", 2}};

inline Vec ket(int i, int d = 2) { return linalg::basis(d, i); }
inline Vec plus() { return (ket(0) + ket(1)) / std::sqrt(2.0); }
inline Vec minus() { return (ket(0) - ket(1)) / std::sqrt(2.0); }
inline Mat proj(const Vec& v) { return v * v.adjoint(); }

inline DensityMatrix pure(const Vec& v, const Space& s = kS) { return DensityMatrix::pure(s, v); }

// sigma_z projectors labelled "+1", "-1"; output on S'.
inline Instrument z_projective(const Space& s = kS, const std::string& out = "S'") {
  return Instrument(s, {{out, 2}}, {{"+1", proj(ket(0))}, {"-1", proj(ket(1))}});
}

inline OutcomeFunction pm_one() { return {{"+1", 1.0}, {"-1", -1.0}}; }

inline KrausChannel depolarizing(const Space& s, double p) {
  std::vector<Mat> ks{std::sqrt(1 - 3 * p / 4) * Mat::Identity(2, 2)};
  for (char c : {'X', 'Y', 'Z'}) ks.push_back(std::sqrt(p / 4) * linalg::pauli(c));
  return KrausChannel(s, s, ks);
}

inline double max_abs(const Mat& m) { return linalg::max_abs<double>(m); }

}  // namespace support
