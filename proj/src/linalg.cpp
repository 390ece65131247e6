#include "tinstitch/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace tinstitch::linalg {

SymmetricEigen jacobi_eigen(std::vector<double> a, std::size_t n, int max_sweeps)
{
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    v[i * n + i] = 1.0;

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        s += a[i * n + j] * a[i * n + j];
    return s;
  };
  double scale = 0.0;
  for (double x : a)
    scale += x * x;

  for (int sweep = 0; sweep < max_sweeps; ++sweep)
  {
    if (off_diagonal() <= 1e-30 * std::max(scale, 1e-300))
      break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q)
      {
        const double apq = a[p * n + q];
        if (apq == 0.0)
          continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        for (std::size_t k = 0; k < n; ++k)
        {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k)
        {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        a[p * n + q] = 0.0;
        a[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k)
        {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
  }

  SymmetricEigen out;
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    out.values[i] = a[i * n + i];
  out.vectors = std::move(v);
  return out;
}

std::vector<double> inverse_sqrt_psd(const std::vector<double>& a, std::size_t n, double floor)
{
  const SymmetricEigen eig = jacobi_eigen(a, n);
  std::vector<double> inv(n);
  for (std::size_t k = 0; k < n; ++k)
    inv[k] = 1.0 / std::sqrt(std::max(eig.values[k], floor));
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i; j < n; ++j)
    {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k)
        s += eig.vectors[i * n + k] * inv[k] * eig.vectors[j * n + k];
      out[i * n + j] = s;
      out[j * n + i] = s;
    }
  return out;
}

std::vector<double> matmul(const std::vector<double>& a, const std::vector<double>& b, std::size_t n)
{
  std::vector<double> out(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < n; ++k)
    {
      const double aik = a[i * n + k];
      for (std::size_t j = 0; j < n; ++j)
        out[i * n + j] += aik * b[k * n + j];
    }
  return out;
}

} // namespace tinstitch::linalg
