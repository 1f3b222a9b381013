#pragma once

#include "irrevkit/qcore.hpp"

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace irrevkit::rnd {

using Engine = std::mt19937_64;

// Independent stream per (seed, stream) pair.
Engine engine(std::uint64_t seed, std::uint64_t stream = 0);

double uniform(Engine& g, double lo = 0, double hi = 1);
int uniform_int(Engine& g, int lo, int hi);  // inclusive
Mat ginibre(Engine& g, int rows, int cols);
Mat unitary(Engine& g, int d);
Mat hermitian(Engine& g, int d);
Vec pure(Engine& g, int d);
// Random density matrix of the given rank.
Mat state(Engine& g, int d, int rank);
// Branches "m0", "m1", ... from a random Stinespring isometry.
Instrument instrument(Engine& g, const Space& in, const Space& out, int branches);
std::vector<double> unit_vector3(Engine& g);
// Random Pauli string with at least one non-identity factor.
std::string pauli_string(Engine& g, int qubits);

}  // namespace irrevkit::rnd
