#pragma once

#include <vector>

#include "vlstm/tensor.hpp"

namespace vlstm::linalg {

// Thin QR via Householder reflections; A is m x n with m >= n.
// Returns Q (m x n, orthonormal columns) and R (n x n, upper triangular,
// nonnegative diagonal).
struct QrResult {
    nd::Tensor q;
    nd::Tensor r;
};
QrResult householder_qr(const nd::Tensor& a);

// Random square matrix with orthonormal columns (QR of a Gaussian draw,
// diagonal of R fixed positive so the result is unique given the draw).
nd::Tensor random_orthogonal(int n, uint64_t seed);

// Least squares min ||A x - b||_2 via QR. Throws if the design is rank
// deficient; the message carries the diagonal ratio used as the
// condition diagnostic.
std::vector<double> solve_least_squares(const nd::Tensor& a, const std::vector<double>& b);

// Nonnegative least squares min ||A x - b||_2 s.t. x >= 0
// (Lawson-Hanson active set; deterministic).
std::vector<double> nnls(const nd::Tensor& a, const std::vector<double>& b);

}  // namespace vlstm::linalg
