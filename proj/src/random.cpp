#include "irrevkit/random.hpp"

#include <cmath>

namespace irrevkit::rnd {

Engine engine(std::uint64_t seed, std::uint64_t stream) {
  std::seed_seq seq{std::uint32_t(seed), std::uint32_t(seed >> 32), std::uint32_t(stream),
                    std::uint32_t(stream >> 32)};
  return Engine(seq);
}

double uniform(Engine& g, double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(g);
}

int uniform_int(Engine& g, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(g); }

Mat ginibre(Engine& g, int rows, int cols) {
  std::normal_distribution<double> n;
  Mat a(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) a(i, j) = cplx(n(g), n(g));
  return a;
}

Mat unitary(Engine& g, int d) { return linalg::qf<double>(ginibre(g, d, d)); }

Mat hermitian(Engine& g, int d) { return linalg::hermitize<double>(ginibre(g, d, d)); }

Vec pure(Engine& g, int d) {
  Vec v = ginibre(g, d, 1).col(0);
  return v / v.norm();
}

Mat state(Engine& g, int d, int rank) {
  Mat a = ginibre(g, d, rank);
  Mat r = a * a.adjoint();
  return linalg::hermitize<double>(Mat(r / r.trace().real()));
}

Instrument instrument(Engine& g, const Space& in, const Space& out, int branches) {
  const int di = total_dim(in), dout = total_dim(out);
  Mat v = linalg::qf<double>(ginibre(g, dout * branches, di));
  std::vector<Branch> bs;
  for (int b = 0; b < branches; ++b) bs.push_back({"m" + std::to_string(b), v.middleRows(b * dout, dout)});
  return Instrument(in, out, std::move(bs));
}

std::vector<double> unit_vector3(Engine& g) {
  std::normal_distribution<double> n;
  double x = n(g), y = n(g), z = n(g);
  const double r = std::sqrt(x * x + y * y + z * z);
  return {x / r, y / r, z / r};
}

std::string pauli_string(Engine& g, int qubits) {
  static const char kP[] = {'I', 'X', 'Y', 'Z'};
  for (;;) {
    std::string s;
    for (int i = 0; i < qubits; ++i) s += kP[uniform_int(g, 0, 3)];
    if (s.find_first_not_of('I') != std::string::npos) return s;
  }
}

}  // namespace irrevkit::rnd
