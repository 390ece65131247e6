#pragma once

#include <cstddef>
#include <vector>

namespace tinstitch::linalg {

struct SymmetricEigen
{
  std::vector<double> values;  // n eigenvalues, unordered
  std::vector<double> vectors; // n x n row-major, column j is the eigenvector of values[j]
};

// Cyclic Jacobi rotations on a symmetric n x n row-major matrix.
SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, int max_sweeps = 100);

// V diag(1/sqrt(max(lambda, floor))) V^T
std::vector<double> inverse_sqrt_psd(const std::vector<double>& a, std::size_t n, double floor);

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t n);

} // namespace tinstitch::linalg
