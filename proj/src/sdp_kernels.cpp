#include <vector>

#include "satcons/sdp.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace satcons::sdp {

namespace {

void AccumulateBlock(const Block& block, const Matrix& q, Matrix& h) {
  const auto& coeffs = block.coefficients;
  const std::size_t k = coeffs.size();
  std::vector<Matrix> scaled(k);
  for (std::size_t j = 0; j < k; ++j) scaled[j] = q * coeffs[j].second * q;
  for (std::size_t i = 0; i < k; ++i) {
    const int vi = coeffs[i].first;
    for (std::size_t j = i; j < k; ++j) {
      const int vj = coeffs[j].first;
      const double value = coeffs[i].second.cwiseProduct(scaled[j]).sum();
      h(vi, vj) += value;
      if (vi != vj) h(vj, vi) += value;
    }
  }
}

}  // namespace

Matrix AssembleNormalMatrixSerial(const Problem& problem, const std::vector<Matrix>& scaling_inverse) {
  Matrix h = Matrix::Zero(problem.num_vars, problem.num_vars);
  for (std::size_t b = 0; b < problem.blocks.size(); ++b) {
    AccumulateBlock(problem.blocks[b], scaling_inverse[b], h);
  }
  return h;
}

Matrix AssembleNormalMatrixParallel(const Problem& problem, const std::vector<Matrix>& scaling_inverse) {
#ifdef _OPENMP
  const int num_blocks = static_cast<int>(problem.blocks.size());
  const int threads = omp_get_max_threads();
  if (threads <= 1 || num_blocks < 2) return AssembleNormalMatrixSerial(problem, scaling_inverse);
  std::vector<Matrix> partial(static_cast<std::size_t>(threads),
                              Matrix::Zero(problem.num_vars, problem.num_vars));
#pragma omp parallel for schedule(dynamic)
  for (int b = 0; b < num_blocks; ++b) {
    AccumulateBlock(problem.blocks[static_cast<std::size_t>(b)],
                    scaling_inverse[static_cast<std::size_t>(b)],
                    partial[static_cast<std::size_t>(omp_get_thread_num())]);
  }
  Matrix h = Matrix::Zero(problem.num_vars, problem.num_vars);
  for (const auto& p : partial) h += p;
  return h;
#else
  return AssembleNormalMatrixSerial(problem, scaling_inverse);
#endif
}

}  // namespace satcons::sdp
